//! Layer-wise contrastive training (two-step and one-step), evaluation, and
//! the joint label-register construction for the one-step variant.

use std::collections::HashMap;

use ndarray::Array2;
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;

use super::{
    contrastive_grad_w, cosine_similarity, AdamState, Anchor, DenseNet, LossTrace, LossTraceRow,
    TrainSchedule,
};
use crate::error::{Error, Result};
use crate::qfm::{
    forward_classical_upto, forward_quantum_upto, IqfmModel, Representation, CLASSICAL_INPUT_DIM,
};
use crate::statevector::StateVector;

/// A labeled training or evaluation set in either input modality.
#[derive(Debug, Clone)]
pub enum TrainData {
    Quantum {
        states: Vec<StateVector>,
        labels: Vec<u32>,
    },
    Classical {
        images: Vec<Vec<f64>>,
        labels: Vec<u32>,
        /// Rotate positive partners by 90° during contrastive training.
        augment_positives: bool,
    },
}

impl TrainData {
    pub fn len(&self) -> usize {
        self.labels().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn labels(&self) -> &[u32] {
        match self {
            TrainData::Quantum { labels, .. } => labels,
            TrainData::Classical { labels, .. } => labels,
        }
    }

    /// Classes are contiguous `0..K`; the count is the largest label + 1.
    pub fn n_classes(&self) -> usize {
        self.labels().iter().map(|&y| y as usize + 1).max().unwrap_or(0)
    }

    fn rotate_positive(&self) -> bool {
        matches!(
            self,
            TrainData::Classical {
                augment_positives: true,
                ..
            }
        )
    }

    fn check(&self) -> Result<()> {
        let consistent = match self {
            TrainData::Quantum { states, labels } => states.len() == labels.len(),
            TrainData::Classical { images, labels, .. } => images.len() == labels.len(),
        };
        if !consistent {
            return Err(Error::Dimension {
                context: "training labels",
                expected: self.len(),
                actual: self.labels().len(),
            });
        }
        if self.is_empty() {
            return Err(Error::Config("training set is empty".into()));
        }
        Ok(())
    }

    /// Forward one sample through the first `upto` layers.
    fn forward<R: Rng + ?Sized>(
        &self,
        model: &IqfmModel,
        idx: usize,
        rotated: bool,
        noise_p: f64,
        shots: Option<u64>,
        rng: &mut R,
        upto: usize,
    ) -> Result<Representation> {
        match self {
            TrainData::Quantum { states, .. } => {
                forward_quantum_upto(model, &states[idx], noise_p, shots, rng, upto)
            }
            TrainData::Classical { images, .. } => {
                if noise_p != 0.0 {
                    return Err(Error::Config(
                        "rotation noise applies to quantum input states only".into(),
                    ));
                }
                if rotated {
                    let turned = rotate_image_90(&images[idx])?;
                    forward_classical_upto(model, &turned, shots, rng, upto)
                } else {
                    forward_classical_upto(model, &images[idx], shots, rng, upto)
                }
            }
        }
    }
}

/// Clockwise quarter turn of a 28×28 image stored row-major.
pub fn rotate_image_90(image: &[f64]) -> Result<Vec<f64>> {
    const SIDE: usize = 28;
    if image.len() != CLASSICAL_INPUT_DIM {
        return Err(Error::Dimension {
            context: "image to rotate",
            expected: CLASSICAL_INPUT_DIM,
            actual: image.len(),
        });
    }
    let mut out = vec![0.0; CLASSICAL_INPUT_DIM];
    for r in 0..SIDE {
        for c in 0..SIDE {
            out[r * SIDE + c] = image[(SIDE - 1 - c) * SIDE + r];
        }
    }
    Ok(out)
}

/// Layer-`layer` features of one (possibly rotated) sample, cached across
/// outer epochs whenever they are deterministic (exact expectations consume
/// no randomness and the weights below this layer are frozen).
fn layer_features<R: Rng + ?Sized>(
    model: &IqfmModel,
    data: &TrainData,
    layer: usize,
    idx: usize,
    rotated: bool,
    shots: Option<u64>,
    cache: &mut HashMap<(usize, bool), Vec<f64>>,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if shots.is_none() {
        if let Some(g) = cache.get(&(idx, rotated)) {
            return Ok(g.clone());
        }
    }
    let rep = data.forward(model, idx, rotated, 0.0, shots, rng, layer)?;
    let g = rep.features[layer - 1].clone();
    if shots.is_none() {
        cache.insert((idx, rotated), g.clone());
    }
    Ok(g)
}

/// Mean loss and gradient over a batch of feature triples, one Adam step,
/// one trace row.
#[allow(clippy::too_many_arguments)]
fn inner_step(
    weights: &mut Array2<f64>,
    adam: &mut AdamState<ndarray::Ix2>,
    triples: &[(Option<Vec<f64>>, Vec<f64>, Vec<f64>)],
    frozen_anchor: Option<&[f64]>,
    schedule: &TrainSchedule,
    trace: &mut LossTrace,
    layer: usize,
    outer: usize,
    inner: usize,
) -> Result<()> {
    let mut grad = Array2::zeros(weights.raw_dim());
    let mut mean_loss = 0.0;
    for (g_anchor, g_plus, g_minus) in triples {
        let anchor = match (g_anchor, frozen_anchor) {
            (Some(g), _) => Anchor::Trainable(g),
            (None, Some(p)) => Anchor::Frozen(p),
            (None, None) => unreachable!("triple built without any anchor"),
        };
        let (loss, g) = contrastive_grad_w(weights, anchor, g_plus, g_minus, schedule.tau)?;
        mean_loss += loss;
        grad += &g;
    }
    let scale = 1.0 / triples.len() as f64;
    mean_loss *= scale;
    grad *= scale;
    adam.step(
        weights,
        &grad,
        schedule.optimizer.learning_rate,
        schedule.optimizer.weight_decay,
    )?;
    trace.rows.push(LossTraceRow {
        layer,
        outer_epoch: outer,
        inner_epoch: inner,
        mean_loss,
    });
    Ok(())
}

/// Two-step contrastive training of `W_1..W_L`, one layer at a time.
///
/// For each layer, every outer epoch shuffles the sample order, draws one
/// same-label positive and one different-label negative per anchor, and
/// collects that layer's features for all three (re-sampling shot noise
/// here, and only here). The inner epochs then take full-batch Adam steps on
/// the mean contrastive loss; the anchor representation is recomputed under
/// the current weights at every step, so its branch carries gradient too.
/// Weights of earlier layers stay frozen, and no circuit angle ever changes.
pub fn train_layerwise<R: Rng + ?Sized>(
    model: IqfmModel,
    data: &TrainData,
    schedule: &TrainSchedule,
    rng: &mut R,
) -> Result<(IqfmModel, LossTrace)> {
    schedule.validate()?;
    data.check()?;
    let labels = data.labels().to_vec();
    if labels.iter().min() == labels.iter().max() {
        return Err(Error::Config(
            "contrastive training needs at least two classes".into(),
        ));
    }
    let rotate = data.rotate_positive();
    let n = data.len();
    let mut model = model;
    let mut trace = LossTrace::default();

    for layer in 1..=model.layers {
        let mut cache: HashMap<(usize, bool), Vec<f64>> = HashMap::new();
        let mut adam = AdamState::for_param(&model.weights[layer - 1]);
        for outer in 0..schedule.outer_epochs {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(rng);
            let mut triples = Vec::with_capacity(n);
            for &i in &order {
                let y = labels[i];
                let positives: Vec<usize> = (0..n)
                    .filter(|&j| j != i && labels[j] == y)
                    .collect();
                let &j = positives.choose(rng).ok_or(Error::Pairing(y))?;
                let negatives: Vec<usize> = (0..n).filter(|&k| labels[k] != y).collect();
                let &k = negatives
                    .choose(rng)
                    .expect("two classes exist, so negatives are nonempty");
                let g_a = layer_features(
                    &model, data, layer, i, false, schedule.shot_budget, &mut cache, rng,
                )?;
                let g_p = layer_features(
                    &model, data, layer, j, rotate, schedule.shot_budget, &mut cache, rng,
                )?;
                let g_n = layer_features(
                    &model, data, layer, k, false, schedule.shot_budget, &mut cache, rng,
                )?;
                triples.push((Some(g_a), g_p, g_n));
            }
            for inner in 0..schedule.inner_epochs {
                inner_step(
                    &mut model.weights[layer - 1],
                    &mut adam,
                    &triples,
                    None,
                    schedule,
                    &mut trace,
                    layer,
                    outer,
                    inner,
                )?;
            }
        }
    }
    Ok((model, trace))
}

/// Accuracy of a trained model plus readout on a labeled set: fraction of
/// samples whose argmax class matches, ties resolved to the lowest index.
pub fn evaluate<R: Rng + ?Sized>(
    model: &IqfmModel,
    readout: &DenseNet,
    data: &TrainData,
    noise_p: f64,
    shots: Option<u64>,
    rng: &mut R,
) -> Result<f64> {
    data.check()?;
    let mut correct = 0usize;
    for (i, &y) in data.labels().to_vec().iter().enumerate() {
        let rep = data.forward(model, i, false, noise_p, shots, rng, model.layers)?;
        if readout.predict(&rep.concatenated())? == y {
            correct += 1;
        }
    }
    Ok(correct as f64 / data.len() as f64)
}

/// Quantum encoding of the class label appended to the data register.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelEncoding {
    /// `⌈log₂ K⌉` qubits holding the label in binary.
    DenseBinary,
    /// `K` qubits with exactly the label qubit excited.
    OneHot,
}

impl LabelEncoding {
    pub fn register_qubits(&self, n_classes: usize) -> usize {
        match self {
            LabelEncoding::DenseBinary => {
                usize::BITS as usize - (n_classes - 1).leading_zeros() as usize
            }
            LabelEncoding::OneHot => n_classes,
        }
    }
}

/// `|φ⟩ ⊗ |label⟩`: the data register keeps the high bits, the label
/// register the low bits.
pub fn joint_input(
    state: &StateVector,
    label: u32,
    n_classes: usize,
    encoding: LabelEncoding,
) -> Result<StateVector> {
    if n_classes < 2 {
        return Err(Error::Config(
            "a label register needs at least two classes".into(),
        ));
    }
    if label as usize >= n_classes {
        return Err(Error::Config(format!(
            "label {label} outside the {n_classes}-class range"
        )));
    }
    let register = encoding.register_qubits(n_classes);
    let reg_dim = 1usize << register;
    let basis = match encoding {
        LabelEncoding::DenseBinary => label as usize,
        LabelEncoding::OneHot => 1usize << (n_classes - 1 - label as usize),
    };
    let mut amps = vec![Complex64::new(0.0, 0.0); state.dim() * reg_dim];
    for (i, &a) in state.amplitudes().iter().enumerate() {
        amps[i * reg_dim + basis] = a;
    }
    StateVector::from_amplitudes(state.n_qubits() + register, amps)
}

/// A trained one-step classifier: model weights plus the frozen random
/// anchors and the label-register convention it was trained under.
#[derive(Debug, Clone)]
pub struct OneStepModel {
    pub model: IqfmModel,
    /// One reference representation per layer, components Uniform[−1, 1].
    pub anchors: Vec<Vec<f64>>,
    pub encoding: LabelEncoding,
    pub n_classes: usize,
}

/// One-step contrastive training on joint data–label inputs.
///
/// Anchors are drawn once from `rng` before any other randomness and stay
/// frozen; they replace the anchor forward entirely. The positive input of a
/// sample is `|φ⟩⊗|y_true⟩`, the negative the same state with a wrong label
/// (the only other one for binary tasks, uniformly drawn otherwise). The
/// layer-wise schedule matches two-step training, with the anchor branch
/// carrying no gradient.
pub fn train_one_step<R: Rng + ?Sized>(
    model: IqfmModel,
    data: &TrainData,
    encoding: LabelEncoding,
    schedule: &TrainSchedule,
    rng: &mut R,
) -> Result<(OneStepModel, LossTrace)> {
    schedule.validate()?;
    data.check()?;
    let states = match data {
        TrainData::Quantum { states, .. } => states,
        TrainData::Classical { .. } => {
            return Err(Error::Config(
                "one-step training operates on quantum inputs".into(),
            ));
        }
    };
    let labels = data.labels().to_vec();
    let n_classes = data.n_classes();
    if n_classes < 2 {
        return Err(Error::Config(
            "contrastive training needs at least two classes".into(),
        ));
    }
    let register = encoding.register_qubits(n_classes);
    let expected_qubits = states[0].n_qubits() + register;
    if model.n_qubits != expected_qubits {
        return Err(Error::Config(format!(
            "one-step model must act on data plus label register: expected \
             {expected_qubits} qubits, model has {}",
            model.n_qubits
        )));
    }

    let anchors: Vec<Vec<f64>> = (0..model.layers)
        .map(|_| {
            (0..model.augmented_dim)
                .map(|_| rng.gen_range(-1.0..1.0))
                .collect()
        })
        .collect();

    let n = data.len();
    let mut model = model;
    let mut trace = LossTrace::default();
    for layer in 1..=model.layers {
        // Joint states are few per sample (true label plus wrong draws), so
        // exact features cache per (sample, register label).
        let mut cache: HashMap<(usize, u32), Vec<f64>> = HashMap::new();
        let mut adam = AdamState::for_param(&model.weights[layer - 1]);
        for outer in 0..schedule.outer_epochs {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(rng);
            let mut triples = Vec::with_capacity(n);
            for &i in &order {
                let y = labels[i];
                let wrong = if n_classes == 2 {
                    1 - y
                } else {
                    let options: Vec<u32> =
                        (0..n_classes as u32).filter(|&k| k != y).collect();
                    *options.choose(rng).expect("n_classes ≥ 2")
                };
                let mut joint_features = |label: u32, rng: &mut R| -> Result<Vec<f64>> {
                    if schedule.shot_budget.is_none() {
                        if let Some(g) = cache.get(&(i, label)) {
                            return Ok(g.clone());
                        }
                    }
                    let joint = joint_input(&states[i], label, n_classes, encoding)?;
                    let rep = forward_quantum_upto(
                        &model,
                        &joint,
                        0.0,
                        schedule.shot_budget,
                        rng,
                        layer,
                    )?;
                    let g = rep.features[layer - 1].clone();
                    if schedule.shot_budget.is_none() {
                        cache.insert((i, label), g.clone());
                    }
                    Ok(g)
                };
                let g_p = joint_features(y, rng)?;
                let g_n = joint_features(wrong, rng)?;
                triples.push((None, g_p, g_n));
            }
            for inner in 0..schedule.inner_epochs {
                inner_step(
                    &mut model.weights[layer - 1],
                    &mut adam,
                    &triples,
                    Some(&anchors[layer - 1]),
                    schedule,
                    &mut trace,
                    layer,
                    outer,
                    inner,
                )?;
            }
        }
    }
    Ok((
        OneStepModel {
            model,
            anchors,
            encoding,
            n_classes,
        },
        trace,
    ))
}

/// Classify by cumulative anchor similarity: for every candidate label `k`,
/// forward `|φ⟩⊗|k⟩` and sum `cs(h_l, p_l)` over layers; the best-scoring
/// candidate wins, ties to the lowest index.
pub fn predict_one_step<R: Rng + ?Sized>(
    one: &OneStepModel,
    state: &StateVector,
    noise_p: f64,
    shots: Option<u64>,
    rng: &mut R,
) -> Result<u32> {
    let mut best = (0u32, f64::NEG_INFINITY);
    for k in 0..one.n_classes as u32 {
        let joint = joint_input(state, k, one.n_classes, one.encoding)?;
        let rep = crate::qfm::forward_quantum(&one.model, &joint, noise_p, shots, rng)?;
        let mut score = 0.0;
        for (h, p) in rep.layers.iter().zip(&one.anchors) {
            score += cosine_similarity(h, p)?;
        }
        if score > best.1 {
            best = (k, score);
        }
    }
    Ok(best.0)
}

/// Accuracy of a one-step classifier over a labeled quantum set.
pub fn evaluate_one_step<R: Rng + ?Sized>(
    one: &OneStepModel,
    data: &TrainData,
    noise_p: f64,
    shots: Option<u64>,
    rng: &mut R,
) -> Result<f64> {
    data.check()?;
    let states = match data {
        TrainData::Quantum { states, .. } => states,
        TrainData::Classical { .. } => {
            return Err(Error::Config(
                "one-step evaluation operates on quantum inputs".into(),
            ));
        }
    };
    let mut correct = 0usize;
    for (state, &y) in states.iter().zip(data.labels()) {
        if predict_one_step(one, state, noise_p, shots, rng)? == y {
            correct += 1;
        }
    }
    Ok(correct as f64 / data.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qfm::{init_model, IqfmConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_state(n: usize, rng: &mut ChaCha8Rng) -> StateVector {
        let mut amps: Vec<Complex64> = (0..1usize << n)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        for a in &mut amps {
            *a /= norm;
        }
        StateVector::from_amplitudes(n, amps).unwrap()
    }

    fn tiny_quantum_set(n_qubits: usize, per_class: usize, seed: u64) -> TrainData {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut states = Vec::new();
        let mut labels = Vec::new();
        for class in 0..2u32 {
            for _ in 0..per_class {
                states.push(random_state(n_qubits, &mut rng));
                labels.push(class);
            }
        }
        TrainData::Quantum { states, labels }
    }

    fn tiny_schedule(outer: usize, inner: usize) -> TrainSchedule {
        let mut s = TrainSchedule::quantum_default(0);
        s.outer_epochs = outer;
        s.inner_epochs = inner;
        s
    }

    #[test]
    fn rotation_is_a_clockwise_quarter_turn() {
        let mut img = vec![0.0; 784];
        img[0] = 1.0; // top-left
        img[1] = 2.0; // top row, second column
        let turned = rotate_image_90(&img).unwrap();
        // Top row becomes the rightmost column.
        assert_eq!(turned[27], 1.0);
        assert_eq!(turned[28 + 27], 2.0);
        // Four quarter turns restore the original.
        let mut four = img.clone();
        for _ in 0..4 {
            four = rotate_image_90(&four).unwrap();
        }
        assert_eq!(four, img);
        assert!(rotate_image_90(&[0.0; 100]).is_err());
    }

    #[test]
    fn layerwise_training_reduces_loss_and_freezes_angles() {
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        let model = init_model(&IqfmConfig::quantum(2, 2), &mut rng).unwrap();
        let checksum = model.angle_checksum();
        let init_weights = model.weights.clone();
        let data = tiny_quantum_set(2, 2, 72);
        // A single outer epoch keeps the triple batch fixed, isolating the
        // descent property of the inner loop.
        let schedule = tiny_schedule(1, 40);
        let (trained, trace) =
            train_layerwise(model, &data, &schedule, &mut ChaCha8Rng::seed_from_u64(73)).unwrap();
        assert_eq!(trace.rows.len(), 2 * 40);
        assert!(trace.rows.iter().all(|r| r.mean_loss.is_finite()));
        for layer in 1..=2 {
            let (first, last) = trace.layer_span(layer).unwrap();
            assert!(last <= first, "layer {layer}: {last} > {first}");
        }
        assert_eq!(trained.angle_checksum(), checksum);
        assert_ne!(trained.weights[0], init_weights[0]);
        assert_ne!(trained.weights[1], init_weights[1]);
    }

    #[test]
    fn training_is_deterministic_given_the_seed() {
        let mut rng = ChaCha8Rng::seed_from_u64(74);
        let model = init_model(&IqfmConfig::quantum(2, 2), &mut rng).unwrap();
        let data = tiny_quantum_set(2, 2, 75);
        let schedule = tiny_schedule(2, 3);
        let run = |seed: u64| {
            train_layerwise(
                model.clone(),
                &data,
                &schedule,
                &mut ChaCha8Rng::seed_from_u64(seed),
            )
            .unwrap()
        };
        let (a, ta) = run(9);
        let (b, tb) = run(9);
        assert_eq!(a.weights, b.weights);
        assert_eq!(ta.rows, tb.rows);
        let (c, _) = run(10);
        assert_ne!(a.weights, c.weights);
    }

    #[test]
    fn singleton_class_is_a_pairing_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(76);
        let model = init_model(&IqfmConfig::quantum(2, 1), &mut rng).unwrap();
        let mut data = tiny_quantum_set(2, 2, 77);
        if let TrainData::Quantum { states, labels } = &mut data {
            states.push(random_state(2, &mut rng));
            labels.push(2); // a third class with a single member
        }
        let err = train_layerwise(model, &data, &tiny_schedule(1, 1), &mut rng).unwrap_err();
        assert!(matches!(err, Error::Pairing(2)));
    }

    #[test]
    fn single_class_set_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(78);
        let model = init_model(&IqfmConfig::quantum(2, 1), &mut rng).unwrap();
        let data = TrainData::Quantum {
            states: vec![random_state(2, &mut rng), random_state(2, &mut rng)],
            labels: vec![0, 0],
        };
        assert!(matches!(
            train_layerwise(model, &data, &tiny_schedule(1, 1), &mut rng),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn joint_input_appends_the_label_register() {
        let mut rng = ChaCha8Rng::seed_from_u64(79);
        let state = random_state(2, &mut rng);
        // Dense binary, two classes: one extra qubit, label in the low bit.
        let joint = joint_input(&state, 1, 2, LabelEncoding::DenseBinary).unwrap();
        assert_eq!(joint.n_qubits(), 3);
        for (i, &a) in state.amplitudes().iter().enumerate() {
            assert_eq!(joint.amplitudes()[2 * i + 1], a);
            assert_eq!(joint.amplitudes()[2 * i], Complex64::new(0.0, 0.0));
        }
        // One-hot, four classes: four extra qubits, label 0 excites the
        // first, i.e. register basis |1000⟩ = 8.
        let single = random_state(1, &mut rng);
        let joint = joint_input(&single, 0, 4, LabelEncoding::OneHot).unwrap();
        assert_eq!(joint.n_qubits(), 5);
        assert_eq!(joint.amplitudes()[8], single.amplitudes()[0]);
        assert_eq!(joint.amplitudes()[16 + 8], single.amplitudes()[1]);
        assert!(joint_input(&state, 5, 4, LabelEncoding::DenseBinary).is_err());
    }

    #[test]
    fn dense_register_sizes_follow_class_count() {
        assert_eq!(LabelEncoding::DenseBinary.register_qubits(2), 1);
        assert_eq!(LabelEncoding::DenseBinary.register_qubits(3), 2);
        assert_eq!(LabelEncoding::DenseBinary.register_qubits(4), 2);
        assert_eq!(LabelEncoding::OneHot.register_qubits(4), 4);
    }

    #[test]
    fn one_step_trains_and_predicts_within_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(80);
        // 2 data qubits + 1 dense label qubit.
        let model = init_model(&IqfmConfig::quantum(3, 2), &mut rng).unwrap();
        let data = tiny_quantum_set(2, 2, 81);
        let schedule = tiny_schedule(1, 5);
        let (one, trace) = train_one_step(
            model,
            &data,
            LabelEncoding::DenseBinary,
            &schedule,
            &mut ChaCha8Rng::seed_from_u64(82),
        )
        .unwrap();
        assert_eq!(one.anchors.len(), 2);
        assert!(one.anchors.iter().all(|p| p.len() == 12
            && p.iter().all(|v| (-1.0..1.0).contains(v))));
        assert_eq!(trace.rows.len(), 2 * 5);
        let state = random_state(2, &mut rng);
        let class = predict_one_step(&one, &state, 0.0, None, &mut rng).unwrap();
        assert!(class < 2);
        let acc = evaluate_one_step(&one, &data, 0.0, None, &mut rng).unwrap();
        assert!((0.0..=1.0).contains(&acc));
    }

    #[test]
    fn one_step_decisions_are_scale_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(83);
        let model = init_model(&IqfmConfig::quantum(3, 2), &mut rng).unwrap();
        let data = tiny_quantum_set(2, 2, 84);
        let (one, _) = train_one_step(
            model,
            &data,
            LabelEncoding::DenseBinary,
            &tiny_schedule(1, 3),
            &mut ChaCha8Rng::seed_from_u64(85),
        )
        .unwrap();
        let mut scaled = one.clone();
        for p in &mut scaled.anchors {
            for v in p.iter_mut() {
                *v *= 2.5;
            }
        }
        for _ in 0..5 {
            let s = random_state(2, &mut rng);
            assert_eq!(
                predict_one_step(&one, &s, 0.0, None, &mut rng).unwrap(),
                predict_one_step(&scaled, &s, 0.0, None, &mut rng).unwrap()
            );
        }
    }

    #[test]
    fn one_step_rejects_mismatched_register() {
        let mut rng = ChaCha8Rng::seed_from_u64(86);
        // Model sized for the data alone, missing the label qubit.
        let model = init_model(&IqfmConfig::quantum(2, 1), &mut rng).unwrap();
        let data = tiny_quantum_set(2, 2, 87);
        assert!(matches!(
            train_one_step(
                model,
                &data,
                LabelEncoding::DenseBinary,
                &tiny_schedule(1, 1),
                &mut rng
            ),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn evaluate_scores_a_perfect_and_a_constant_readout() {
        let mut rng = ChaCha8Rng::seed_from_u64(88);
        let model = init_model(&IqfmConfig::quantum(2, 1), &mut rng).unwrap();
        let data = tiny_quantum_set(2, 2, 89);
        // Train a readout on the representations themselves; 4 samples are
        // easily memorized.
        let mut inputs = Vec::new();
        for i in 0..data.len() {
            let rep = data
                .forward(&model, i, false, 0.0, None, &mut rng, 1)
                .unwrap();
            inputs.push(rep.concatenated());
        }
        let mut schedule = TrainSchedule::quantum_default(0);
        schedule.readout_epochs = 300;
        let net = super::super::train_readout(
            &inputs,
            data.labels(),
            2,
            &schedule,
            &mut ChaCha8Rng::seed_from_u64(90),
        )
        .unwrap();
        let acc = evaluate(&model, &net, &data, 0.0, None, &mut rng).unwrap();
        assert_eq!(acc, 1.0);
    }
}
