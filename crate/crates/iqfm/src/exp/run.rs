//! Experiment execution: dataset staging, per-trial runners for every
//! method, and the sweep drivers behind the command-line entry points.
//!
//! A sweep expands a config into a list of points (one varying knob), and
//! every `(point, trial)` pair runs independently with a seed derived from
//! the master seed and trial index alone. The same trial therefore sees the
//! same initialization and training randomness at every point of a sweep —
//! deliberate, so paired comparisons (noise retention in particular) differ
//! only in the quantity being swept. Training itself always runs on clean
//! inputs; `noise_p` perturbs evaluation only.
//!
//! Datasets are generated in memory and cached per process. Generation uses
//! a salted seed stream separate from the training stream, so a cache hit
//! and a cold build leave the training randomness identical. The periodic
//! 8-qubit split is loaded from `data_dir` instead when `gen-data` has
//! written it there.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, OnceLock};
use std::time::Instant;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::baselines::{
    classical_baseline_forward, evaluate_qcnn, evaluate_tanh_baseline, exact_qcnn_predict,
    init_tanh_baseline, qcnn_train, shadow_collect, shadow_gram, svm_train_cv, train_tanh_baseline,
    QcnnTrainConfig, ShadowSet,
};
use crate::error::{Error, Result};
use crate::exp::config::{ExperimentConfig, Method, Task};
use crate::exp::idx::{count_idx, ensure_fashion_files, parse_idx_subset, ImageDataset};
use crate::exp::report::{
    compute_metrics, export_embeddings, read_report, summary_to_csv, write_report,
    ExperimentReport, ReportRow,
};
use crate::exp::seeds::trial_seed;
use crate::learn::{
    evaluate, evaluate_one_step, train_layerwise, train_one_step, train_readout, AdamHyper,
    LabelEncoding, TrainData, TrainSchedule,
};
use crate::qfm::{init_model, forward_classical, forward_quantum, IqfmConfig};
use crate::spinchain::{
    default_task_a_table, default_task_b_table, generate_open_chain, generate_task_a,
    generate_task_b_sized, load_dataset, save_dataset, write_bytes_atomic, GeneratedSplit,
    SpinDataset,
};
use crate::statevector::StateVector;

/// Which knob a run varies; `Point` runs the config as-is.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sweep {
    Point,
    Noise,
    Shots,
    Depth,
    Width,
}

/// One resolved setting of the swept knobs.
#[derive(Debug, Clone, Copy)]
struct RunPoint {
    index: usize,
    noise_p: f64,
    shots: Option<u64>,
    layers: usize,
    var_depth: usize,
    width: usize,
}

/// Points in [−1.6, 1.6] along the cut the analytic classifier is probed on.
fn open_chain_grid(n_points: usize) -> Result<Vec<(f64, f64)>> {
    if n_points < 2 {
        return Err(Error::Config(
            "the open-chain sweep needs at least 2 grid points".into(),
        ));
    }
    Ok((0..n_points)
        .map(|k| (0.5, -1.6 + 3.2 * k as f64 / (n_points - 1) as f64))
        .collect())
}

fn sweep_points(config: &ExperimentConfig, sweep: Sweep) -> Result<Vec<RunPoint>> {
    let base = RunPoint {
        index: 0,
        noise_p: config.noise_p,
        shots: config.shots,
        layers: config.layers,
        var_depth: config.var_depth,
        width: config.width,
    };
    let mut points: Vec<RunPoint> = match sweep {
        Sweep::Point => vec![base],
        Sweep::Noise => {
            if config.task == Task::Fashion {
                return Err(Error::Config(
                    "rotation noise applies to quantum input states only".into(),
                ));
            }
            // The clean point anchors retention, so it always leads the list.
            let mut values = config.noise_values.clone();
            if values.first() != Some(&0.0) {
                values.retain(|&p| p != 0.0);
                values.insert(0, 0.0);
            }
            for &p in &values {
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::NoiseStrength(p));
                }
            }
            values
                .iter()
                .map(|&p| RunPoint { noise_p: p, ..base })
                .collect()
        }
        Sweep::Shots => {
            if config.method == Method::ClassicalNn {
                return Err(Error::Config(
                    "the classical network has no measurement step to sweep".into(),
                ));
            }
            config
                .shot_values
                .iter()
                .map(|&s| RunPoint {
                    shots: (s > 0).then_some(s),
                    ..base
                })
                .collect()
        }
        Sweep::Depth => match config.method {
            Method::ExactQcnn => {
                return Err(Error::Config(
                    "the analytic circuit classifier has no depth to sweep".into(),
                ))
            }
            Method::ShadowSvm => {
                return Err(Error::Config(
                    "the shadow kernel method has no depth to sweep".into(),
                ))
            }
            Method::Qcnn => config
                .layer_values
                .iter()
                .map(|&d| RunPoint {
                    var_depth: d,
                    ..base
                })
                .collect(),
            _ => config
                .layer_values
                .iter()
                .map(|&l| RunPoint { layers: l, ..base })
                .collect(),
        },
        Sweep::Width => {
            if config.task != Task::Fashion {
                return Err(Error::Config(
                    "width sweeps apply to the image task only".into(),
                ));
            }
            config
                .width_values
                .iter()
                .map(|&w| RunPoint { width: w, ..base })
                .collect()
        }
    };
    for (i, p) in points.iter_mut().enumerate() {
        p.index = i;
    }
    Ok(points)
}

// --- dataset staging ---

/// Salt separating dataset-generation randomness from training randomness.
const DATA_STREAM_SALT: u64 = 0x5EED_DA7A;

fn data_rng(config: &ExperimentConfig, trial: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(trial_seed(
        config.master_seed ^ DATA_STREAM_SALT,
        trial as u64,
    ))
}

/// A task's ground states split for one run.
struct SplitSets {
    n_qubits: usize,
    train_states: Vec<StateVector>,
    train_labels: Vec<u32>,
    test_states: Vec<StateVector>,
    test_labels: Vec<u32>,
}

fn unpack(dataset: &SpinDataset) -> (Vec<StateVector>, Vec<u32>) {
    dataset
        .samples
        .iter()
        .map(|s| (s.state.clone(), s.label))
        .unzip()
}

fn from_generated(split: GeneratedSplit) -> SplitSets {
    for flag in &split.flags {
        eprintln!("dataset flag: {flag}");
    }
    let n_qubits = split.train.n_qubits;
    let (train_states, train_labels) = unpack(&split.train);
    let (test_states, test_labels) = unpack(&split.test);
    SplitSets {
        n_qubits,
        train_states,
        train_labels,
        test_states,
        test_labels,
    }
}

fn spin_cache() -> &'static Mutex<HashMap<String, Arc<SplitSets>>> {
    static CACHE: OnceLock<Mutex<HashMap<String, Arc<SplitSets>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn image_cache() -> &'static Mutex<HashMap<String, Arc<ImageDataset>>> {
    static CACHE: OnceLock<Mutex<HashMap<String, Arc<ImageDataset>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Fetch-or-build against a process cache. Builds run outside the lock;
/// a rare concurrent double build is wasted work, not wrong data, because
/// builders derive all randomness from the key's parameters.
fn cached_spin<F>(key: String, build: F) -> Result<Arc<SplitSets>>
where
    F: FnOnce() -> Result<SplitSets>,
{
    if let Some(hit) = spin_cache().lock().unwrap().get(&key) {
        return Ok(hit.clone());
    }
    let built = Arc::new(build()?);
    Ok(spin_cache()
        .lock()
        .unwrap()
        .entry(key)
        .or_insert(built)
        .clone())
}

fn cached_image<F>(key: String, build: F) -> Result<Arc<ImageDataset>>
where
    F: FnOnce() -> Result<ImageDataset>,
{
    if let Some(hit) = image_cache().lock().unwrap().get(&key) {
        return Ok(hit.clone());
    }
    let built = Arc::new(build()?);
    Ok(image_cache()
        .lock()
        .unwrap()
        .entry(key)
        .or_insert(built)
        .clone())
}

/// The full periodic 8-qubit split: loaded from `data_dir` when `gen-data`
/// has written it there, generated on the fixed coupling grid otherwise.
fn task_a_full(data_dir: &Path) -> Result<Arc<SplitSets>> {
    let train_path = data_dir.join("task_a_train.bin");
    let test_path = data_dir.join("task_a_test.bin");
    let key = format!("task_a:{}", data_dir.display());
    cached_spin(key, || {
        if train_path.exists() && test_path.exists() {
            let train = load_dataset(&train_path)?;
            let test = load_dataset(&test_path)?;
            let n_qubits = train.n_qubits;
            let (train_states, train_labels) = unpack(&train);
            let (test_states, test_labels) = unpack(&test);
            return Ok(SplitSets {
                n_qubits,
                train_states,
                train_labels,
                test_states,
                test_labels,
            });
        }
        Ok(from_generated(generate_task_a(&default_task_a_table())?))
    })
}

/// Class-balanced index choice: indices are grouped by label, shuffled, and
/// taken round-robin so small subsets keep every class represented.
fn stratified_indices(labels: &[u32], size: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut by_class: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, &y) in labels.iter().enumerate() {
        by_class.entry(y).or_default().push(i);
    }
    for group in by_class.values_mut() {
        group.shuffle(rng);
    }
    let mut picked = Vec::with_capacity(size);
    let mut round = 0;
    while picked.len() < size {
        let mut progressed = false;
        for group in by_class.values() {
            if picked.len() == size {
                break;
            }
            if let Some(&i) = group.get(round) {
                picked.push(i);
                progressed = true;
            }
        }
        if !progressed {
            break; // every class exhausted
        }
        round += 1;
    }
    picked
}

fn stratified_subset(
    states: &[StateVector],
    labels: &[u32],
    size: usize,
    rng: &mut ChaCha8Rng,
) -> (Vec<StateVector>, Vec<u32>) {
    let picked = stratified_indices(labels, size, rng);
    (
        picked.iter().map(|&i| states[i].clone()).collect(),
        picked.iter().map(|&i| labels[i]).collect(),
    )
}

/// Quota per class for a requested total, remainder to the lowest classes.
fn class_quota(total: usize) -> Result<[usize; 4]> {
    if total < 4 {
        return Err(Error::Config(format!(
            "the four-phase task needs at least 4 training samples, got {total}"
        )));
    }
    let base = total / 4;
    let rem = total % 4;
    let mut quota = [base; 4];
    for q in quota.iter_mut().take(rem) {
        *q += 1;
    }
    Ok(quota)
}

fn spin_split(config: &ExperimentConfig, trial: usize) -> Result<Arc<SplitSets>> {
    match config.task {
        Task::TaskA => {
            let full = task_a_full(&config.data_dir)?;
            if config.train_size == 0 && config.test_size == 0 {
                return Ok(full);
            }
            let mut rng = data_rng(config, trial);
            let (train_states, train_labels) = if config.train_size == 0
                || config.train_size >= full.train_states.len()
            {
                (full.train_states.clone(), full.train_labels.clone())
            } else {
                stratified_subset(
                    &full.train_states,
                    &full.train_labels,
                    config.train_size,
                    &mut rng,
                )
            };
            let test_take = if config.test_size == 0 {
                full.test_states.len()
            } else {
                config.test_size.min(full.test_states.len())
            };
            Ok(Arc::new(SplitSets {
                n_qubits: full.n_qubits,
                train_states,
                train_labels,
                test_states: full.test_states[..test_take].to_vec(),
                test_labels: full.test_labels[..test_take].to_vec(),
            }))
        }
        Task::TaskB => {
            let (quota, per_class) = if config.train_size == 0 {
                ([13, 13, 12, 12], 250)
            } else {
                if config.test_size % 4 != 0 || config.test_size == 0 {
                    return Err(Error::Config(format!(
                        "four-phase test_size must be a positive multiple of 4, got {}",
                        config.test_size
                    )));
                }
                (class_quota(config.train_size)?, config.test_size / 4)
            };
            let key = format!(
                "task_b:{}:{}:{:?}:{}",
                config.master_seed, trial, quota, per_class
            );
            let mut rng = data_rng(config, trial);
            cached_spin(key, move || {
                Ok(from_generated(generate_task_b_sized(
                    &mut rng,
                    &default_task_b_table(),
                    quota,
                    per_class,
                    500_000,
                )?))
            })
        }
        Task::TaskAOpen | Task::Fashion => Err(Error::Config(format!(
            "task {} has no periodic train/test split",
            config.task
        ))),
    }
}

/// The labeled open-boundary grid the analytic classifier is scored on.
/// `test_size` overrides the 50-point default (mostly for fast tests).
fn open_chain_sets(config: &ExperimentConfig) -> Result<Arc<SplitSets>> {
    let n_points = if config.test_size == 0 {
        50
    } else {
        config.test_size
    };
    cached_spin(format!("task_a_open:{n_points}"), || {
        let grid = open_chain_grid(n_points)?;
        let (dataset, flags) = generate_open_chain(&grid, &default_task_a_table(), 9)?;
        for flag in &flags {
            eprintln!("dataset flag: {flag}");
        }
        let (test_states, test_labels) = unpack(&dataset);
        Ok(SplitSets {
            n_qubits: 9,
            train_states: Vec::new(),
            train_labels: Vec::new(),
            test_states,
            test_labels,
        })
    })
}

fn fashion_train(config: &ExperimentConfig, trial: usize) -> Result<Arc<ImageDataset>> {
    let paths = ensure_fashion_files(&config.data_dir, config.master_seed)?;
    let key = format!(
        "fashion_train:{}:{}:{}:{}",
        config.data_dir.display(),
        config.master_seed,
        config.train_size,
        trial
    );
    cached_image(key, || {
        let all_labels = read_idx_labels(&paths.train_images, &paths.train_labels)?;
        let count = all_labels.len();
        // Contrastive pairing needs every class at least twice, so subsets
        // are drawn class-balanced rather than uniformly.
        let indices: Vec<usize> = if config.train_size == 0 || config.train_size >= count {
            (0..count).collect()
        } else {
            let mut rng = data_rng(config, trial);
            stratified_indices(&all_labels, config.train_size, &mut rng)
        };
        parse_idx_subset(&paths.train_images, &paths.train_labels, &indices)
    })
}

fn fashion_test(config: &ExperimentConfig) -> Result<Arc<ImageDataset>> {
    let paths = ensure_fashion_files(&config.data_dir, config.master_seed)?;
    let key = format!(
        "fashion_test:{}:{}",
        config.data_dir.display(),
        config.test_size
    );
    cached_image(key, || {
        let count = count_idx(&paths.test_images, &paths.test_labels)?;
        let take = if config.test_size == 0 {
            count
        } else {
            config.test_size.min(count)
        };
        let indices: Vec<usize> = (0..take).collect();
        parse_idx_subset(&paths.test_images, &paths.test_labels, &indices)
    })
}

// --- per-method runners ---

fn schedule_from(config: &ExperimentConfig, point: RunPoint, seed: u64) -> TrainSchedule {
    let base = TrainSchedule::quantum_default(seed);
    TrainSchedule {
        tau: config.tau,
        outer_epochs: config.outer_epochs,
        inner_epochs: config.inner_epochs,
        optimizer: AdamHyper {
            learning_rate: config.learning_rate,
            weight_decay: config.weight_decay,
            batch_size: 0,
        },
        readout_epochs: config.readout_epochs,
        shot_budget: point.shots,
        ..base
    }
}

fn run_iqfm_quantum(
    config: &ExperimentConfig,
    point: RunPoint,
    trial: usize,
    contrastive: bool,
    seed: u64,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let sets = spin_split(config, trial)?;
    let schedule = schedule_from(config, point, seed);
    let mut model = init_model(&IqfmConfig::quantum(sets.n_qubits, point.layers), rng)?;
    let train_data = TrainData::Quantum {
        states: sets.train_states.clone(),
        labels: sets.train_labels.clone(),
    };
    if contrastive {
        model = train_layerwise(model, &train_data, &schedule, rng)?.0;
    }
    let mut reps = Vec::with_capacity(sets.train_states.len());
    for state in &sets.train_states {
        reps.push(forward_quantum(&model, state, 0.0, point.shots, rng)?.concatenated());
    }
    let readout = train_readout(
        &reps,
        &sets.train_labels,
        config.task.n_classes(),
        &schedule,
        rng,
    )?;
    let test_data = TrainData::Quantum {
        states: sets.test_states.clone(),
        labels: sets.test_labels.clone(),
    };
    evaluate(&model, &readout, &test_data, point.noise_p, point.shots, rng)
}

fn run_iqfm_fashion(
    config: &ExperimentConfig,
    point: RunPoint,
    trial: usize,
    contrastive: bool,
    seed: u64,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let train = fashion_train(config, trial)?;
    let test = fashion_test(config)?;
    let schedule = schedule_from(config, point, seed);
    let mut model = init_model(&IqfmConfig::classical(point.width, point.layers), rng)?;
    let train_data = TrainData::Classical {
        images: train.images.clone(),
        labels: train.labels.clone(),
        augment_positives: config.augment_positives,
    };
    if contrastive {
        model = train_layerwise(model, &train_data, &schedule, rng)?.0;
    }
    let mut reps = Vec::with_capacity(train.len());
    for image in &train.images {
        reps.push(forward_classical(&model, image, point.shots, rng)?.concatenated());
    }
    let readout = train_readout(&reps, &train.labels, 10, &schedule, rng)?;
    let test_data = TrainData::Classical {
        images: test.images.clone(),
        labels: test.labels.clone(),
        augment_positives: false,
    };
    evaluate(&model, &readout, &test_data, 0.0, point.shots, rng)
}

fn run_onestep(
    config: &ExperimentConfig,
    point: RunPoint,
    trial: usize,
    seed: u64,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let sets = spin_split(config, trial)?;
    let encoding = LabelEncoding::DenseBinary;
    let register = encoding.register_qubits(config.task.n_classes());
    let schedule = schedule_from(config, point, seed);
    let model = init_model(
        &IqfmConfig::quantum(sets.n_qubits + register, point.layers),
        rng,
    )?;
    let train_data = TrainData::Quantum {
        states: sets.train_states.clone(),
        labels: sets.train_labels.clone(),
    };
    let (one, _) = train_one_step(model, &train_data, encoding, &schedule, rng)?;
    let test_data = TrainData::Quantum {
        states: sets.test_states.clone(),
        labels: sets.test_labels.clone(),
    };
    evaluate_one_step(&one, &test_data, point.noise_p, point.shots, rng)
}

/// One fresh noise draw per state; identity at `p = 0`.
fn noised(states: &[StateVector], noise_p: f64, rng: &mut ChaCha8Rng) -> Result<Vec<StateVector>> {
    states
        .iter()
        .map(|s| {
            if noise_p > 0.0 {
                s.apply_rx_noise(noise_p, rng)
            } else {
                Ok(s.clone())
            }
        })
        .collect()
}

fn run_qcnn(
    config: &ExperimentConfig,
    point: RunPoint,
    trial: usize,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let sets = spin_split(config, trial)?;
    let n_classes = config.task.n_classes();
    let mut train_config = match (n_classes, point.shots) {
        (2, None) => QcnnTrainConfig::exact_binary(),
        (_, None) => QcnnTrainConfig::exact_multiclass(),
        (2, Some(s)) => QcnnTrainConfig::shot_binary(s),
        (_, Some(s)) => QcnnTrainConfig::shot_multiclass(s),
    };
    train_config.var_depth = point.var_depth;
    if config.qcnn_epochs > 0 {
        train_config.epochs = config.qcnn_epochs;
    }
    let (model, _) = qcnn_train(&sets.train_states, &sets.train_labels, &train_config, rng)?;
    let test_states = noised(&sets.test_states, point.noise_p, rng)?;
    evaluate_qcnn(&model, &test_states, &sets.test_labels, point.shots, rng)
}

fn run_exact_qcnn(
    config: &ExperimentConfig,
    point: RunPoint,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let sets = open_chain_sets(config)?;
    let shots = point.shots.unwrap_or(1_000);
    let mut correct = 0usize;
    for (state, &label) in sets.test_states.iter().zip(&sets.test_labels) {
        let input = if point.noise_p > 0.0 {
            state.apply_rx_noise(point.noise_p, rng)?
        } else {
            state.clone()
        };
        let (_, predicted) = exact_qcnn_predict(&input, shots, rng)?;
        if predicted == label {
            correct += 1;
        }
    }
    Ok(correct as f64 / sets.test_states.len() as f64)
}

fn run_shadow_svm(
    config: &ExperimentConfig,
    point: RunPoint,
    trial: usize,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let sets = spin_split(config, trial)?;
    let snapshots = point.shots.unwrap_or(1_000) as usize;
    let n_train = sets.train_states.len();

    // One joint kernel over train ∪ test keeps every pairwise entry
    // consistent; noise perturbs each state once before collection.
    let mut shadow_sets: Vec<ShadowSet> =
        Vec::with_capacity(n_train + sets.test_states.len());
    for state in sets.train_states.iter().chain(&sets.test_states) {
        let input = if point.noise_p > 0.0 {
            state.apply_rx_noise(point.noise_p, rng)?
        } else {
            state.clone()
        };
        shadow_sets.push(shadow_collect(&input, snapshots, rng)?);
    }
    let gram = shadow_gram(&shadow_sets)?;
    if !gram.excluded.is_empty() {
        eprintln!(
            "shadow kernel dropped {} of {} samples (nonpositive purity)",
            gram.excluded.len(),
            shadow_sets.len()
        );
    }
    let mut row_of = HashMap::new();
    for (row, &original) in gram.retained.iter().enumerate() {
        row_of.insert(original, row);
    }
    // Retained training samples, in original order, with their kernel rows.
    let kept: Vec<(usize, usize)> = (0..n_train)
        .filter_map(|i| row_of.get(&i).map(|&row| (i, row)))
        .collect();
    if kept.len() < 2 {
        return Err(Error::Numeric(
            "too few training samples survived the purity filter".into(),
        ));
    }
    let labels_pm: Vec<f64> = kept
        .iter()
        .map(|&(i, _)| if sets.train_labels[i] == 1 { 1.0 } else { -1.0 })
        .collect();
    let k_train = Array2::from_shape_fn((kept.len(), kept.len()), |(a, b)| {
        gram.normalized[[kept[a].1, kept[b].1]]
    });
    let model = svm_train_cv(&k_train, &labels_pm)?;

    let mut correct = 0usize;
    for (j, &label) in sets.test_labels.iter().enumerate() {
        let truth = if label == 1 { 1.0 } else { -1.0 };
        // An excluded test sample has no kernel row to classify with; it
        // scores as a miss rather than silently shrinking the test set.
        if let Some(&row) = row_of.get(&(n_train + j)) {
            let kernel_row: Vec<f64> = kept
                .iter()
                .map(|&(_, train_row)| gram.normalized[[train_row, row]])
                .collect();
            if model.predict(&kernel_row)? == truth {
                correct += 1;
            }
        }
    }
    Ok(correct as f64 / sets.test_labels.len() as f64)
}

fn run_classical_nn(
    config: &ExperimentConfig,
    point: RunPoint,
    trial: usize,
    seed: u64,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let train = fashion_train(config, trial)?;
    let test = fashion_test(config)?;
    let schedule = schedule_from(config, point, seed);
    let model = init_tanh_baseline(point.width, point.layers, rng)?;
    let train_data = TrainData::Classical {
        images: train.images.clone(),
        labels: train.labels.clone(),
        augment_positives: config.augment_positives,
    };
    let (model, _) = train_tanh_baseline(model, &train_data, &schedule, rng)?;
    let mut reps = Vec::with_capacity(train.len());
    for image in &train.images {
        reps.push(classical_baseline_forward(&model, image)?.concatenated());
    }
    let readout = train_readout(&reps, &train.labels, 10, &schedule, rng)?;
    let test_data = TrainData::Classical {
        images: test.images.clone(),
        labels: test.labels.clone(),
        augment_positives: false,
    };
    evaluate_tanh_baseline(&model, &readout, &test_data)
}

fn run_single(config: &ExperimentConfig, point: RunPoint, trial: usize) -> Result<ReportRow> {
    let seed = trial_seed(config.master_seed, trial as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = Instant::now();
    let accuracy = match config.method {
        Method::IqfmContrastive | Method::IqfmNoncontrastive => {
            let contrastive = config.method == Method::IqfmContrastive;
            if config.task == Task::Fashion {
                run_iqfm_fashion(config, point, trial, contrastive, seed, &mut rng)?
            } else {
                run_iqfm_quantum(config, point, trial, contrastive, seed, &mut rng)?
            }
        }
        Method::IqfmOnestep => run_onestep(config, point, trial, seed, &mut rng)?,
        Method::Qcnn => run_qcnn(config, point, trial, &mut rng)?,
        Method::ExactQcnn => run_exact_qcnn(config, point, &mut rng)?,
        Method::ShadowSvm => run_shadow_svm(config, point, trial, &mut rng)?,
        Method::ClassicalNn => run_classical_nn(config, point, trial, seed, &mut rng)?,
    };
    let on_image_task = config.task == Task::Fashion;
    let (layers, var_depth, width) = match config.method {
        Method::Qcnn => (0, point.var_depth, 0),
        Method::ExactQcnn | Method::ShadowSvm => (0, 0, 0),
        _ => (point.layers, 0, if on_image_task { point.width } else { 0 }),
    };
    Ok(ReportRow {
        run_id: format!(
            "{}-{}-p{:02}-t{:03}",
            config.task, config.method, point.index, trial
        ),
        task: config.task,
        method: config.method,
        layers,
        var_depth,
        width,
        shots: point.shots,
        noise_p: point.noise_p,
        seed,
        accuracy,
        retention: None,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

/// Retention = accuracy over the same trial's clean accuracy. Rows whose
/// clean partner is missing or scored zero keep an empty retention.
fn attach_retention(report: &mut ExperimentReport) {
    let mut clean: HashMap<u64, f64> = HashMap::new();
    for row in &report.rows {
        if row.noise_p == 0.0 {
            clean.insert(row.seed, row.accuracy);
        }
    }
    for row in &mut report.rows {
        if let Some(&base) = clean.get(&row.seed) {
            if base > 0.0 {
                row.retention = Some(row.accuracy / base);
            }
        }
    }
}

/// Run every `(point, trial)` pair of the sweep. Failed runs become notes in
/// `errors` and the rest of the sweep completes. `workers = 0` uses one
/// thread per core.
pub fn run_experiment(
    config: &ExperimentConfig,
    sweep: Sweep,
    workers: usize,
) -> Result<ExperimentReport> {
    config.validate()?;
    let points = sweep_points(config, sweep)?;
    let jobs: Vec<(RunPoint, usize)> = points
        .iter()
        .flat_map(|&p| (0..config.n_trials).map(move |t| (p, t)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?;
    let outcomes: Vec<std::result::Result<ReportRow, String>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(point, trial)| {
                run_single(config, point, trial).map_err(|e| {
                    format!(
                        "{}-{}-p{:02}-t{:03}: {e}",
                        config.task, config.method, point.index, trial
                    )
                })
            })
            .collect()
    });
    let mut report = ExperimentReport::default();
    for outcome in outcomes {
        match outcome {
            Ok(row) => report.rows.push(row),
            Err(note) => {
                eprintln!("run failed: {note}");
                report.errors.push(note);
            }
        }
    }
    if sweep == Sweep::Noise {
        attach_retention(&mut report);
    }
    Ok(report)
}

/// [`run_experiment`] plus a `report.csv` in the config's output directory.
pub fn run_and_save(
    config: &ExperimentConfig,
    sweep: Sweep,
    workers: usize,
) -> Result<(ExperimentReport, PathBuf)> {
    let report = run_experiment(config, sweep, workers)?;
    std::fs::create_dir_all(&config.out_dir)
        .map_err(|e| Error::io(config.out_dir.display().to_string(), e))?;
    let path = config.out_dir.join("report.csv");
    write_report(&path, &report)?;
    Ok((report, path))
}

/// Write the configured task's dataset files into `data_dir` and return the
/// paths. Spin sets come with a flag log (label checks near phase
/// boundaries); image files are synthesized only when absent.
pub fn generate_datasets(config: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let dir = &config.data_dir;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    let write_flags = |name: &str, flags: &[String]| -> Result<PathBuf> {
        let path = dir.join(name);
        let mut text = flags.join("\n");
        if !text.is_empty() {
            text.push('\n');
        }
        write_bytes_atomic(&path, text.as_bytes())?;
        Ok(path)
    };
    match config.task {
        Task::TaskA => {
            let split = generate_task_a(&default_task_a_table())?;
            let train = dir.join("task_a_train.bin");
            let test = dir.join("task_a_test.bin");
            save_dataset(&split.train, &train)?;
            save_dataset(&split.test, &test)?;
            let flags = write_flags("task_a_flags.log", &split.flags)?;
            Ok(vec![train, test, flags])
        }
        Task::TaskB => {
            // Trial 0's draw, for inspection; runs regenerate per trial.
            let (quota, per_class) = if config.train_size == 0 {
                ([13, 13, 12, 12], 250)
            } else {
                (
                    class_quota(config.train_size)?,
                    config.test_size.max(4) / 4,
                )
            };
            let mut rng = data_rng(config, 0);
            let split = generate_task_b_sized(
                &mut rng,
                &default_task_b_table(),
                quota,
                per_class,
                500_000,
            )?;
            let train = dir.join("task_b_train.bin");
            let test = dir.join("task_b_test.bin");
            save_dataset(&split.train, &train)?;
            save_dataset(&split.test, &test)?;
            let flags = write_flags("task_b_flags.log", &split.flags)?;
            Ok(vec![train, test, flags])
        }
        Task::TaskAOpen => {
            let n_points = if config.test_size == 0 {
                50
            } else {
                config.test_size
            };
            let grid = open_chain_grid(n_points)?;
            let (dataset, flags) = generate_open_chain(&grid, &default_task_a_table(), 9)?;
            let path = dir.join("task_a_open.bin");
            save_dataset(&dataset, &path)?;
            let flag_path = write_flags("task_a_open_flags.log", &flags)?;
            Ok(vec![path, flag_path])
        }
        Task::Fashion => {
            let paths = ensure_fashion_files(dir, config.master_seed)?;
            Ok(vec![
                paths.train_images,
                paths.train_labels,
                paths.test_images,
                paths.test_labels,
            ])
        }
    }
}

/// Train trial 0's representation and write the test set's concatenated
/// layer outputs to `out_dir/embeddings.csv`. Only the methods that produce
/// a feature embedding support this.
pub fn export_trained_embeddings(config: &ExperimentConfig) -> Result<PathBuf> {
    config.validate()?;
    let trial = 0usize;
    let seed = trial_seed(config.master_seed, trial as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let point = sweep_points(config, Sweep::Point)?[0];
    let contrastive = config.method == Method::IqfmContrastive;

    let (labels, reps): (Vec<u32>, Vec<Vec<f64>>) = match config.method {
        Method::IqfmContrastive | Method::IqfmNoncontrastive => {
            if config.task == Task::Fashion {
                let train = fashion_train(config, trial)?;
                let test = fashion_test(config)?;
                let schedule = schedule_from(config, point, seed);
                let mut model =
                    init_model(&IqfmConfig::classical(point.width, point.layers), &mut rng)?;
                if contrastive {
                    let train_data = TrainData::Classical {
                        images: train.images.clone(),
                        labels: train.labels.clone(),
                        augment_positives: config.augment_positives,
                    };
                    model = train_layerwise(model, &train_data, &schedule, &mut rng)?.0;
                }
                let mut reps = Vec::with_capacity(test.len());
                for image in &test.images {
                    reps.push(
                        forward_classical(&model, image, point.shots, &mut rng)?.concatenated(),
                    );
                }
                (test.labels.clone(), reps)
            } else {
                let sets = spin_split(config, trial)?;
                let schedule = schedule_from(config, point, seed);
                let mut model =
                    init_model(&IqfmConfig::quantum(sets.n_qubits, point.layers), &mut rng)?;
                if contrastive {
                    let train_data = TrainData::Quantum {
                        states: sets.train_states.clone(),
                        labels: sets.train_labels.clone(),
                    };
                    model = train_layerwise(model, &train_data, &schedule, &mut rng)?.0;
                }
                let mut reps = Vec::with_capacity(sets.test_states.len());
                for state in &sets.test_states {
                    reps.push(
                        forward_quantum(&model, state, point.noise_p, point.shots, &mut rng)?
                            .concatenated(),
                    );
                }
                (sets.test_labels.clone(), reps)
            }
        }
        Method::ClassicalNn => {
            let train = fashion_train(config, trial)?;
            let test = fashion_test(config)?;
            let schedule = schedule_from(config, point, seed);
            let model = init_tanh_baseline(point.width, point.layers, &mut rng)?;
            let train_data = TrainData::Classical {
                images: train.images.clone(),
                labels: train.labels.clone(),
                augment_positives: config.augment_positives,
            };
            let (model, _) = train_tanh_baseline(model, &train_data, &schedule, &mut rng)?;
            let mut reps = Vec::with_capacity(test.len());
            for image in &test.images {
                reps.push(classical_baseline_forward(&model, image)?.concatenated());
            }
            (test.labels.clone(), reps)
        }
        other => {
            return Err(Error::Config(format!(
                "method {other} has no feature embedding to export"
            )))
        }
    };
    std::fs::create_dir_all(&config.out_dir)
        .map_err(|e| Error::io(config.out_dir.display().to_string(), e))?;
    let path = config.out_dir.join("embeddings.csv");
    export_embeddings(&path, &labels, &reps)?;
    Ok(path)
}

/// Reduce a `report.csv` to per-configuration statistics, write them next to
/// it as `summary.csv`, and return the summary text.
pub fn summarize_report(report_path: &Path, summary_path: &Path) -> Result<String> {
    let report = read_report(report_path)?;
    let summary = summary_to_csv(&compute_metrics(&report.rows));
    write_bytes_atomic(summary_path, summary.as_bytes())?;
    Ok(summary)
}
