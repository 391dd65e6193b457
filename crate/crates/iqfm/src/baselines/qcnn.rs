//! Trainable quantum convolutional network, the supervised end-to-end
//! reference on the spin-chain tasks.
//!
//! The circuit alternates convolution blocks and pooling steps. One block
//! repeats, `var_depth` times over the currently active qubits: an RX row, an
//! RZ row, a second RX row, then an RZZ on each adjacent active pair. Pooling
//! then entangles neighbouring active qubits with CNOTs and keeps every
//! second one, halving the active set; blocks and poolings alternate until a
//! single qubit remains and its ⟨Z⟩ is the network output. Binary labels
//! regress that value onto ±1 targets with mean squared error; the
//! multiclass variant appends an affine head and trains with cross-entropy.
//!
//! Every rotation is generated by a Pauli word, so the parameter-shift rule
//! `(f(θ+π/2) − f(θ−π/2))/2` is the exact derivative; the same rule doubles
//! as the finite-shot gradient estimator. In the infinite-shot limit training
//! is full-batch Adam; under a shot budget it is mini-batch SGD with early
//! stopping on the training-loss plateau.

use std::fs;
use std::path::Path;

use ndarray::Array1;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result, MAX_QUBITS};
use crate::learn::AdamState;
use crate::spinchain::write_bytes_atomic;
use crate::statevector::{Circuit, Gate, StateVector};

/// Expectation-estimation regime for forwards and gradients.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShotMode {
    /// Infinite-shot limit: exact expectation values.
    Exact,
    /// Finite samples per expectation value.
    Shots(u64),
}

impl ShotMode {
    fn budget(self) -> Option<u64> {
        match self {
            ShotMode::Exact => None,
            ShotMode::Shots(s) => Some(s),
        }
    }
}

/// Convolution/pooling network with a fixed reduction plan.
#[derive(Debug, Clone, PartialEq)]
pub struct QcnnModel {
    pub n_qubits: usize,
    /// Convolution repetitions inside each block.
    pub var_depth: usize,
    /// 2 = scalar ⟨Z⟩ output; more classes add the affine head.
    pub n_classes: usize,
    /// Active-qubit list per conv+pool stage, widest first.
    pub stages: Vec<Vec<usize>>,
    /// Rotation angles, flattened in gate-application order.
    pub params: Array1<f64>,
    /// Affine head `z ↦ w·z + b`, one row per class (empty when binary).
    pub fc_weight: Array1<f64>,
    pub fc_bias: Array1<f64>,
}

/// Reduction plan and parameter count implied by the dimensions; fails when
/// the active set cannot be halved all the way down to one qubit.
fn layout(n_qubits: usize, var_depth: usize, n_classes: usize) -> Result<(Vec<Vec<usize>>, usize)> {
    if n_qubits == 0 || n_qubits > MAX_QUBITS {
        return Err(Error::QubitCount(n_qubits));
    }
    if !n_qubits.is_power_of_two() || n_qubits < 2 {
        return Err(Error::Config(format!(
            "pooling halves the active set until one qubit remains, which needs \
             a power-of-two qubit count of at least 2, got {n_qubits}"
        )));
    }
    if var_depth == 0 {
        return Err(Error::Config("var_depth must be at least 1".into()));
    }
    if n_classes < 2 {
        return Err(Error::Config(format!(
            "a classifier needs at least 2 classes, got {n_classes}"
        )));
    }
    let mut stages = Vec::new();
    let mut active: Vec<usize> = (0..n_qubits).collect();
    while active.len() > 1 {
        stages.push(active.clone());
        active = active.into_iter().step_by(2).collect();
    }
    // Per repetition: three rotation rows plus one RZZ per adjacent pair.
    let n_params = stages.iter().map(|s| var_depth * (4 * s.len() - 1)).sum();
    Ok((stages, n_params))
}

impl QcnnModel {
    /// Fresh model with rotation angles drawn from `U[0, 2π)` and, for
    /// multiclass heads, uniform Glorot fan-in/fan-out weights over zero
    /// biases.
    pub fn init<R: Rng + ?Sized>(
        n_qubits: usize,
        var_depth: usize,
        n_classes: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let (stages, n_params) = layout(n_qubits, var_depth, n_classes)?;
        let params =
            Array1::from_shape_fn(n_params, |_| rng.gen_range(0.0..std::f64::consts::TAU));
        let (fc_weight, fc_bias) = if n_classes > 2 {
            let bound = (6.0 / (1 + n_classes) as f64).sqrt();
            (
                Array1::from_shape_fn(n_classes, |_| rng.gen_range(-bound..bound)),
                Array1::zeros(n_classes),
            )
        } else {
            (Array1::zeros(0), Array1::zeros(0))
        };
        Ok(QcnnModel {
            n_qubits,
            var_depth,
            n_classes,
            stages,
            params,
            fc_weight,
            fc_bias,
        })
    }

    /// Qubit measured after the last pooling (position 0 survives every
    /// halving).
    pub fn final_qubit(&self) -> usize {
        self.stages.first().map_or(0, |s| s[0])
    }

    /// The full gate sequence under the current parameters.
    pub fn circuit(&self) -> Circuit {
        let mut c = Circuit::new(self.n_qubits);
        let mut k = 0;
        for stage in &self.stages {
            for _ in 0..self.var_depth {
                for &q in stage {
                    c.push(Gate::Rx(q, self.params[k]));
                    k += 1;
                }
                for &q in stage {
                    c.push(Gate::Rz(q, self.params[k]));
                    k += 1;
                }
                for &q in stage {
                    c.push(Gate::Rx(q, self.params[k]));
                    k += 1;
                }
                for pair in stage.windows(2) {
                    c.push(Gate::Rzz(pair[0], pair[1], self.params[k]));
                    k += 1;
                }
            }
            // Pool: each odd position controls a CNOT into its even
            // neighbour, then the even positions stay active.
            for pair in stage.chunks(2) {
                c.push(Gate::Cnot {
                    control: pair[1],
                    target: pair[0],
                });
            }
        }
        debug_assert_eq!(k, self.params.len());
        c
    }

    /// Output layer on the measured value: identity for binary models, the
    /// affine class head otherwise.
    pub fn head(&self, z: f64) -> QcnnOutput {
        if self.n_classes == 2 {
            QcnnOutput::Value(z)
        } else {
            QcnnOutput::Logits(
                self.fc_weight
                    .iter()
                    .zip(&self.fc_bias)
                    .map(|(w, b)| w * z + b)
                    .collect(),
            )
        }
    }
}

/// Network output: the surviving qubit's ⟨Z⟩, or its affine image as class
/// logits.
#[derive(Debug, Clone, PartialEq)]
pub enum QcnnOutput {
    Value(f64),
    Logits(Vec<f64>),
}

/// ⟨Z⟩ on the surviving qubit, exact or estimated from `shots` samples.
pub fn qcnn_expectation<R: Rng + ?Sized>(
    state: &StateVector,
    model: &QcnnModel,
    shots: Option<u64>,
    rng: &mut R,
) -> Result<f64> {
    if state.n_qubits() != model.n_qubits {
        return Err(Error::Dimension {
            context: "qcnn input state",
            expected: model.n_qubits,
            actual: state.n_qubits(),
        });
    }
    let out = state.run_circuit(&model.circuit())?;
    let q = model.final_qubit();
    match shots {
        None => Ok(out.z_expectations()[q]),
        Some(s) => Ok(out.sample_counts(s, rng)?.z_estimates()[q]),
    }
}

/// Exact forward pass: ⟨Z⟩ for binary models, logits for multiclass ones.
pub fn qcnn_forward(state: &StateVector, model: &QcnnModel) -> Result<QcnnOutput> {
    if state.n_qubits() != model.n_qubits {
        return Err(Error::Dimension {
            context: "qcnn input state",
            expected: model.n_qubits,
            actual: state.n_qubits(),
        });
    }
    let z = state.run_circuit(&model.circuit())?.z_expectations()[model.final_qubit()];
    Ok(model.head(z))
}

/// Predicted class: sign of ⟨Z⟩ for binary models (positive ⇒ class 1),
/// argmax logit otherwise (ties to the lowest class).
pub fn qcnn_predict<R: Rng + ?Sized>(
    state: &StateVector,
    model: &QcnnModel,
    shots: Option<u64>,
    rng: &mut R,
) -> Result<u32> {
    let z = qcnn_expectation(state, model, shots, rng)?;
    Ok(match model.head(z) {
        QcnnOutput::Value(v) => u32::from(v > 0.0),
        QcnnOutput::Logits(logits) => {
            let mut best = 0;
            for (k, &l) in logits.iter().enumerate() {
                if l > logits[best] {
                    best = k;
                }
            }
            best as u32
        }
    })
}

/// Fraction of samples classified correctly.
pub fn evaluate_qcnn<R: Rng + ?Sized>(
    model: &QcnnModel,
    states: &[StateVector],
    labels: &[u32],
    shots: Option<u64>,
    rng: &mut R,
) -> Result<f64> {
    check_dataset(states, labels, model.n_classes)?;
    let mut correct = 0;
    for (state, &y) in states.iter().zip(labels) {
        if qcnn_predict(state, model, shots, rng)? == y {
            correct += 1;
        }
    }
    Ok(correct as f64 / states.len() as f64)
}

/// `(f(θ+π/2) − f(θ−π/2))/2` for every rotation angle, both evaluations at
/// the given shot budget (`None` = exact, where the rule equals the analytic
/// derivative of ⟨Z⟩).
pub fn qcnn_param_shift_grad<R: Rng + ?Sized>(
    state: &StateVector,
    model: &QcnnModel,
    shot_budget: Option<u64>,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let mut shifted = model.clone();
    let mut grad = Vec::with_capacity(model.params.len());
    for p in 0..model.params.len() {
        let base = model.params[p];
        shifted.params[p] = base + std::f64::consts::FRAC_PI_2;
        let plus = qcnn_expectation(state, &shifted, shot_budget, rng)?;
        shifted.params[p] = base - std::f64::consts::FRAC_PI_2;
        let minus = qcnn_expectation(state, &shifted, shot_budget, rng)?;
        shifted.params[p] = base;
        grad.push((plus - minus) / 2.0);
    }
    Ok(grad)
}

/// Training setup; the presets mirror the published experiment settings.
#[derive(Debug, Clone, Copy)]
pub struct QcnnTrainConfig {
    pub var_depth: usize,
    pub n_classes: usize,
    pub mode: ShotMode,
    pub epochs: usize,
    /// Samples per gradient step; 0 = full batch.
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Adam decay in exact mode; the finite-shot optimizer is plain SGD.
    pub weight_decay: f64,
    /// Stop after this many consecutive epochs without the training loss
    /// improving by `early_stop_min_delta`; 0 disables.
    pub early_stop_patience: usize,
    pub early_stop_min_delta: f64,
}

impl QcnnTrainConfig {
    /// Binary phase classification, infinite shots: depth 4, 1000 epochs of
    /// full-batch Adam.
    pub fn exact_binary() -> Self {
        QcnnTrainConfig {
            var_depth: 4,
            n_classes: 2,
            mode: ShotMode::Exact,
            epochs: 1000,
            batch_size: 0,
            learning_rate: 1e-3,
            weight_decay: 1e-5,
            early_stop_patience: 0,
            early_stop_min_delta: 1e-4,
        }
    }

    /// Four-class variant, infinite shots: depth 32, 5000 epochs.
    pub fn exact_multiclass() -> Self {
        QcnnTrainConfig {
            var_depth: 32,
            n_classes: 4,
            epochs: 5000,
            ..Self::exact_binary()
        }
    }

    /// Binary task under a shot budget: depth 4, 300 epochs of batch-4 SGD
    /// with plateau early stopping.
    pub fn shot_binary(shots: u64) -> Self {
        QcnnTrainConfig {
            mode: ShotMode::Shots(shots),
            epochs: 300,
            batch_size: 4,
            weight_decay: 0.0,
            early_stop_patience: 20,
            ..Self::exact_binary()
        }
    }

    /// Four-class task under a shot budget: depth 4, batch 5, otherwise as
    /// [`Self::shot_binary`].
    pub fn shot_multiclass(shots: u64) -> Self {
        QcnnTrainConfig {
            n_classes: 4,
            batch_size: 5,
            ..Self::shot_binary(shots)
        }
    }

    fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epoch count must be at least 1".into()));
        }
        if !self.learning_rate.is_finite() || self.learning_rate < 0.0 {
            return Err(Error::Config(format!(
                "learning rate must be finite and nonnegative, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

fn check_dataset(states: &[StateVector], labels: &[u32], n_classes: usize) -> Result<()> {
    if states.len() != labels.len() {
        return Err(Error::Dimension {
            context: "qcnn labels",
            expected: states.len(),
            actual: labels.len(),
        });
    }
    if states.is_empty() {
        return Err(Error::Config("qcnn dataset is empty".into()));
    }
    if let Some(&y) = labels.iter().find(|&&y| y as usize >= n_classes) {
        return Err(Error::Config(format!(
            "label {y} outside the {n_classes} configured classes"
        )));
    }
    Ok(())
}

/// ±1 regression target of a binary label.
fn binary_target(label: u32) -> f64 {
    if label == 1 {
        1.0
    } else {
        -1.0
    }
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

enum Optimizer {
    Adam {
        params: AdamState<ndarray::Ix1>,
        fc_weight: AdamState<ndarray::Ix1>,
        fc_bias: AdamState<ndarray::Ix1>,
    },
    Sgd,
}

/// Parameter-shift training from a fresh random model; returns the model and
/// the per-epoch mean training loss.
pub fn qcnn_train<R: Rng + ?Sized>(
    states: &[StateVector],
    labels: &[u32],
    config: &QcnnTrainConfig,
    rng: &mut R,
) -> Result<(QcnnModel, Vec<f64>)> {
    config.validate()?;
    check_dataset(states, labels, config.n_classes)?;
    let n = states.len();
    let mut model = QcnnModel::init(
        states[0].n_qubits(),
        config.var_depth,
        config.n_classes,
        rng,
    )?;
    let shots = config.mode.budget();
    let mut optimizer = match config.mode {
        ShotMode::Exact => Optimizer::Adam {
            params: AdamState::for_param(&model.params),
            fc_weight: AdamState::for_param(&model.fc_weight),
            fc_bias: AdamState::for_param(&model.fc_bias),
        },
        ShotMode::Shots(_) => Optimizer::Sgd,
    };

    let mut curve = Vec::new();
    let (mut best, mut stale) = (f64::INFINITY, 0usize);
    for _ in 0..config.epochs {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        let batch_size = if config.batch_size == 0 {
            n
        } else {
            config.batch_size.min(n)
        };
        let mut epoch_loss = 0.0;
        for batch in order.chunks(batch_size) {
            let mut g_params = Array1::<f64>::zeros(model.params.len());
            let mut g_weight = Array1::<f64>::zeros(model.fc_weight.len());
            let mut g_bias = Array1::<f64>::zeros(model.fc_bias.len());
            let mut batch_loss = 0.0;
            for &i in batch {
                let z = qcnn_expectation(&states[i], &model, shots, rng)?;
                let dz = qcnn_param_shift_grad(&states[i], &model, shots, rng)?;
                let (loss, dl_dz) = if model.n_classes == 2 {
                    let t = binary_target(labels[i]);
                    ((z - t) * (z - t), 2.0 * (z - t))
                } else {
                    let probs = match model.head(z) {
                        QcnnOutput::Logits(logits) => softmax(&logits),
                        QcnnOutput::Value(_) => unreachable!("multiclass model"),
                    };
                    let mut dl_dz = 0.0;
                    for k in 0..model.n_classes {
                        let d = probs[k] - f64::from(k as u32 == labels[i]);
                        dl_dz += d * model.fc_weight[k];
                        g_weight[k] += d * z;
                        g_bias[k] += d;
                    }
                    (-probs[labels[i] as usize].max(f64::MIN_POSITIVE).ln(), dl_dz)
                };
                batch_loss += loss;
                for (g, d) in g_params.iter_mut().zip(&dz) {
                    *g += dl_dz * d;
                }
            }
            let scale = 1.0 / batch.len() as f64;
            batch_loss *= scale;
            g_params *= scale;
            g_weight *= scale;
            g_bias *= scale;
            match &mut optimizer {
                Optimizer::Adam {
                    params,
                    fc_weight,
                    fc_bias,
                } => {
                    params.step(
                        &mut model.params,
                        &g_params,
                        config.learning_rate,
                        config.weight_decay,
                    )?;
                    if model.n_classes > 2 {
                        fc_weight.step(
                            &mut model.fc_weight,
                            &g_weight,
                            config.learning_rate,
                            config.weight_decay,
                        )?;
                        // Biases go undecayed, matching the readout trainer.
                        fc_bias.step(&mut model.fc_bias, &g_bias, config.learning_rate, 0.0)?;
                    }
                }
                Optimizer::Sgd => {
                    if g_params.iter().chain(&g_weight).any(|g| !g.is_finite()) {
                        return Err(Error::NonFinite("qcnn gradient"));
                    }
                    let lr = config.learning_rate;
                    model.params.zip_mut_with(&g_params, |p, g| *p -= lr * g);
                    model.fc_weight.zip_mut_with(&g_weight, |p, g| *p -= lr * g);
                    model.fc_bias.zip_mut_with(&g_bias, |p, g| *p -= lr * g);
                }
            }
            epoch_loss += batch_loss * batch.len() as f64;
        }
        epoch_loss /= n as f64;
        curve.push(epoch_loss);
        if config.early_stop_patience > 0 {
            if best - epoch_loss >= config.early_stop_min_delta {
                best = epoch_loss;
                stale = 0;
            } else {
                stale += 1;
                if stale >= config.early_stop_patience {
                    break;
                }
            }
        }
    }
    Ok((model, curve))
}

const MAGIC: &[u8; 4] = b"IQCN";
const VERSION: u8 = 1;
const HEADER_LEN: usize = 20;

/// Checkpoint container, magic `IQCN`, little-endian.
///
/// ```text
/// offset  size  field
/// 0       4     magic "IQCN"
/// 4       1     version (1)
/// 5       1     reserved (0)
/// 6       2     reserved (0)
/// 8       4     n_qubits (u32)
/// 12      4     var_depth (u32)
/// 16      4     n_classes (u32)
/// 20      ...   payload: f64 rotation angles in gate order, then the affine
///               head weights and biases (multiclass only)
/// ```
///
/// Trained angles roam outside `[0, 2π)`, so the payload is checked for
/// finiteness only; length is implied exactly by the header.
pub fn save_qcnn(model: &QcnnModel, path: &Path) -> Result<()> {
    let mut bytes = Vec::with_capacity(HEADER_LEN + 8 * model.params.len());
    bytes.extend_from_slice(MAGIC);
    bytes.push(VERSION);
    bytes.push(0);
    bytes.extend_from_slice(&0u16.to_le_bytes());
    for dim in [model.n_qubits, model.var_depth, model.n_classes] {
        bytes.extend_from_slice(&(dim as u32).to_le_bytes());
    }
    for v in model.params.iter().chain(&model.fc_weight).chain(&model.fc_bias) {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    write_bytes_atomic(path, &bytes)
}

pub fn load_qcnn(path: &Path) -> Result<QcnnModel> {
    let display = path.display().to_string();
    let bytes = fs::read(path).map_err(|e| Error::Io {
        path: display.clone(),
        source: e,
    })?;
    let fail = |offset: usize, detail: String| Error::Format {
        path: display.clone(),
        offset: offset as u64,
        detail,
    };

    if bytes.len() < HEADER_LEN {
        return Err(fail(bytes.len(), "file shorter than the 20-byte header".into()));
    }
    if &bytes[0..4] != MAGIC {
        return Err(fail(0, format!("bad magic {:?}, expected \"IQCN\"", &bytes[0..4])));
    }
    if bytes[4] != VERSION {
        return Err(fail(4, format!("unsupported version {}", bytes[4])));
    }
    if bytes[5] != 0 || bytes[6] != 0 || bytes[7] != 0 {
        return Err(fail(5, "reserved fields must be 0".into()));
    }
    let dim_at = |off: usize| u32::from_le_bytes(bytes[off..off + 4].try_into().unwrap()) as usize;
    let (n_qubits, var_depth, n_classes) = (dim_at(8), dim_at(12), dim_at(16));
    let (stages, n_params) = layout(n_qubits, var_depth, n_classes)
        .map_err(|e| fail(8, format!("inconsistent header dims: {e}")))?;
    let fc_len = if n_classes > 2 { 2 * n_classes } else { 0 };

    let expected = HEADER_LEN + 8 * (n_params + fc_len);
    if bytes.len() < expected {
        return Err(fail(
            bytes.len(),
            format!("truncated: {} bytes, header promises {expected}", bytes.len()),
        ));
    }
    if bytes.len() > expected {
        return Err(fail(
            expected,
            format!("{} trailing bytes after the last value", bytes.len() - expected),
        ));
    }

    let mut offset = HEADER_LEN;
    let mut next = |ctx: &str| -> Result<f64> {
        let v = f64::from_le_bytes(bytes[offset..offset + 8].try_into().unwrap());
        if !v.is_finite() {
            return Err(fail(offset, format!("non-finite {ctx} value {v}")));
        }
        offset += 8;
        Ok(v)
    };
    let mut read = |ctx: &str, len: usize| -> Result<Array1<f64>> {
        (0..len).map(|_| next(ctx)).collect::<Result<Vec<f64>>>().map(Array1::from)
    };
    let params = read("rotation angle", n_params)?;
    let fc_weight = read("head weight", fc_len / 2)?;
    let fc_bias = read("head bias", fc_len / 2)?;

    Ok(QcnnModel {
        n_qubits,
        var_depth,
        n_classes,
        stages,
        params,
        fc_weight,
        fc_bias,
    })
}
