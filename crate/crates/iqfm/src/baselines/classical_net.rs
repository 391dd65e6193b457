//! Purely classical twin of the modular image pipeline: the quantum feature
//! maps are replaced by `tanh` activations while everything else — the
//! frozen 784→M projection, the layer count, the trainable `M×M` maps, the
//! layer-wise contrastive protocol, and the concatenated readout — stays
//! identical, isolating what the quantum layers themselves contribute.

use std::collections::HashMap;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::learn::{
    contrastive_grad_tanh, AdamState, Anchor, DenseNet, LossTrace, LossTraceRow, TrainData,
    TrainSchedule,
};
use crate::qfm::{Representation, CLASSICAL_INPUT_DIM};

/// Feed-forward `tanh` network shaped exactly like the modular quantum
/// model: `h_0 = P·x` (no squash), then `h_l = tanh(W_l h_{l−1})`.
#[derive(Debug, Clone, PartialEq)]
pub struct TanhBaseline {
    /// Hidden width `M`.
    pub width: usize,
    /// Trainable layer count `L`.
    pub layers: usize,
    /// Frozen 784→M projection.
    pub projection: Array2<f64>,
    /// Trainable maps `W_1..W_L`, each `M×M`.
    pub weights: Vec<Array2<f64>>,
}

/// Draw a fresh baseline, projection first and then `W_1..W_L`, all
/// Glorot-uniform — the same consumption order as the quantum initializer.
pub fn init_tanh_baseline<R: Rng + ?Sized>(
    width: usize,
    layers: usize,
    rng: &mut R,
) -> Result<TanhBaseline> {
    if width == 0 || layers == 0 {
        return Err(Error::Config(format!(
            "baseline needs positive width and layer count, got {width}×{layers}"
        )));
    }
    let mut glorot = |rows: usize, cols: usize| -> Array2<f64> {
        let bound = (6.0 / (rows + cols) as f64).sqrt();
        Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-bound..bound))
    };
    let projection = glorot(width, CLASSICAL_INPUT_DIM);
    let weights = (0..layers).map(|_| glorot(width, width)).collect();
    Ok(TanhBaseline {
        width,
        layers,
        projection,
        weights,
    })
}

fn check_shapes(model: &TanhBaseline) -> Result<()> {
    if model.projection.nrows() != model.width
        || model.projection.ncols() != CLASSICAL_INPUT_DIM
    {
        return Err(Error::Dimension {
            context: "baseline projection",
            expected: model.width * CLASSICAL_INPUT_DIM,
            actual: model.projection.len(),
        });
    }
    for w in &model.weights {
        if w.nrows() != model.width || w.ncols() != model.width {
            return Err(Error::Dimension {
                context: "baseline weights",
                expected: model.width * model.width,
                actual: w.len(),
            });
        }
    }
    Ok(())
}

/// Input of layer `layer` (1-based): `h_{layer−1}` under the current
/// weights, starting from the unsquashed projection `h_0 = P·x`.
fn layer_input(model: &TanhBaseline, image: &[f64], layer: usize) -> Result<Vec<f64>> {
    check_shapes(model)?;
    if image.len() != CLASSICAL_INPUT_DIM {
        return Err(Error::Dimension {
            context: "baseline input image",
            expected: CLASSICAL_INPUT_DIM,
            actual: image.len(),
        });
    }
    let x = ndarray::ArrayView1::from(image);
    let mut h = model.projection.dot(&x).to_vec();
    for w in &model.weights[..layer - 1] {
        let hv = ndarray::ArrayView1::from(h.as_slice());
        h = w.dot(&hv).iter().map(|v| v.tanh()).collect();
    }
    Ok(h)
}

/// Full forward pass. `features[l]` is the input `h_l` consumed by
/// `W_{l+1}`, `layers[l]` its output `h_{l+1}` — the same bookkeeping the
/// quantum forward uses, so the readout and training code treat both
/// representations alike.
pub fn classical_baseline_forward(model: &TanhBaseline, image: &[f64]) -> Result<Representation> {
    let mut features = Vec::with_capacity(model.layers);
    let mut layers = Vec::with_capacity(model.layers);
    let mut h = layer_input(model, image, 1)?;
    for w in &model.weights {
        features.push(h.clone());
        let hv = ndarray::ArrayView1::from(h.as_slice());
        h = w.dot(&hv).iter().map(|v| v.tanh()).collect();
        layers.push(h.clone());
    }
    Ok(Representation { features, layers })
}

/// Layer-wise contrastive training, mirroring the quantum two-step loop
/// move for move: per outer epoch the sample order is shuffled and one
/// same-label positive plus one different-label negative are drawn per
/// anchor, then the inner epochs take full-batch Adam steps on the mean
/// contrastive loss. Only the `tanh` squash (and hence its gradient slope)
/// differs. The projection stays frozen, as do the circuit angles in the
/// quantum version. A shot budget is meaningless here and is rejected.
pub fn train_tanh_baseline<R: Rng + ?Sized>(
    model: TanhBaseline,
    data: &TrainData,
    schedule: &TrainSchedule,
    rng: &mut R,
) -> Result<(TanhBaseline, LossTrace)> {
    schedule.validate()?;
    check_shapes(&model)?;
    if schedule.shot_budget.is_some() {
        return Err(Error::Config(
            "the classical baseline has no shot budget; use exact expectations".into(),
        ));
    }
    let (images, rotate) = match data {
        TrainData::Classical {
            images,
            augment_positives,
            ..
        } => (images, *augment_positives),
        TrainData::Quantum { .. } => {
            return Err(Error::Config(
                "the classical baseline operates on image inputs".into(),
            ));
        }
    };
    if images.len() != data.labels().len() || data.is_empty() {
        return Err(Error::Config("training set is empty or inconsistent".into()));
    }
    let labels = data.labels().to_vec();
    if labels.iter().min() == labels.iter().max() {
        return Err(Error::Config(
            "contrastive training needs at least two classes".into(),
        ));
    }

    let n = images.len();
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
                let positives: Vec<usize> =
                    (0..n).filter(|&j| j != i && labels[j] == y).collect();
                let &j = positives.choose(rng).ok_or(Error::Pairing(y))?;
                let negatives: Vec<usize> = (0..n).filter(|&k| labels[k] != y).collect();
                let &k = negatives
                    .choose(rng)
                    .expect("two classes exist, so negatives are nonempty");
                let mut features = |idx: usize, rotated: bool| -> Result<Vec<f64>> {
                    if let Some(g) = cache.get(&(idx, rotated)) {
                        return Ok(g.clone());
                    }
                    let g = if rotated {
                        let turned = crate::learn::rotate_image_90(&images[idx])?;
                        layer_input(&model, &turned, layer)?
                    } else {
                        layer_input(&model, &images[idx], layer)?
                    };
                    cache.insert((idx, rotated), g.clone());
                    Ok(g)
                };
                let g_a = features(i, false)?;
                let g_p = features(j, rotate)?;
                let g_n = features(k, false)?;
                triples.push((g_a, g_p, g_n));
            }
            for inner in 0..schedule.inner_epochs {
                let weights = &mut model.weights[layer - 1];
                let mut grad = Array2::zeros(weights.raw_dim());
                let mut mean_loss = 0.0;
                for (g_a, g_p, g_n) in &triples {
                    let (loss, g) = contrastive_grad_tanh(
                        weights,
                        Anchor::Trainable(g_a),
                        g_p,
                        g_n,
                        schedule.tau,
                    )?;
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
            }
        }
    }
    Ok((model, trace))
}

/// Accuracy of a trained baseline plus readout over a labeled image set.
pub fn evaluate_tanh_baseline(
    model: &TanhBaseline,
    readout: &DenseNet,
    data: &TrainData,
) -> Result<f64> {
    let images = match data {
        TrainData::Classical { images, .. } => images,
        TrainData::Quantum { .. } => {
            return Err(Error::Config(
                "the classical baseline operates on image inputs".into(),
            ));
        }
    };
    if data.is_empty() {
        return Err(Error::Config("evaluation set is empty".into()));
    }
    let mut correct = 0usize;
    for (image, &y) in images.iter().zip(data.labels()) {
        let rep = classical_baseline_forward(model, image)?;
        if readout.predict(&rep.concatenated())? == y {
            correct += 1;
        }
    }
    Ok(correct as f64 / data.labels().len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Width-4 model whose projection copies the first four pixels and whose
    /// weights are identity maps.
    fn passthrough_model(layers: usize) -> TanhBaseline {
        let mut projection = Array2::zeros((4, CLASSICAL_INPUT_DIM));
        for i in 0..4 {
            projection[[i, i]] = 1.0;
        }
        TanhBaseline {
            width: 4,
            layers,
            projection,
            weights: (0..layers).map(|_| Array2::eye(4)).collect(),
        }
    }

    #[test]
    fn identity_weights_keep_small_inputs_in_the_linear_regime() {
        let model = passthrough_model(2);
        let mut image = vec![0.0; CLASSICAL_INPUT_DIM];
        let small = [0.01, -0.02, 0.015, 0.005];
        image[..4].copy_from_slice(&small);
        let rep = classical_baseline_forward(&model, &image).unwrap();
        assert_eq!(rep.features.len(), 2);
        assert_eq!(rep.layers.len(), 2);
        // h_0 is the exact projection; tanh then bends it by O(x³) ≤ 3e-6.
        assert_eq!(rep.features[0], small.to_vec());
        for layer in &rep.layers {
            for (h, x) in layer.iter().zip(&small) {
                assert!((h - x).abs() < 1e-5, "{h} vs {x}");
            }
        }
    }

    #[test]
    fn zero_input_yields_a_zero_representation_at_every_layer() {
        let mut rng = ChaCha8Rng::seed_from_u64(91);
        let model = init_tanh_baseline(8, 3, &mut rng).unwrap();
        let rep = classical_baseline_forward(&model, &vec![0.0; CLASSICAL_INPUT_DIM]).unwrap();
        for part in rep.features.iter().chain(&rep.layers) {
            assert!(part.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn activations_stay_inside_the_open_unit_interval() {
        let mut rng = ChaCha8Rng::seed_from_u64(92);
        let model = init_tanh_baseline(8, 3, &mut rng).unwrap();
        let image: Vec<f64> = (0..CLASSICAL_INPUT_DIM)
            .map(|_| rng.gen_range(-5.0..5.0))
            .collect();
        let rep = classical_baseline_forward(&model, &image).unwrap();
        for layer in &rep.layers {
            assert!(layer.iter().all(|&v| v > -1.0 && v < 1.0));
        }
    }

    fn striped_image_set(per_class: usize) -> TrainData {
        let mut images = Vec::new();
        let mut labels = Vec::new();
        for class in 0..2u32 {
            for k in 0..per_class {
                let mut image = vec![0.0; CLASSICAL_INPUT_DIM];
                let offset = if class == 0 { 0 } else { CLASSICAL_INPUT_DIM / 2 };
                for p in 0..CLASSICAL_INPUT_DIM / 2 {
                    image[offset + p] = 0.6 + 0.05 * k as f64;
                }
                images.push(image);
                labels.push(class);
            }
        }
        TrainData::Classical {
            images,
            labels,
            augment_positives: false,
        }
    }

    #[test]
    fn training_reduces_loss_and_freezes_the_projection() {
        let mut rng = ChaCha8Rng::seed_from_u64(93);
        let model = init_tanh_baseline(4, 2, &mut rng).unwrap();
        let frozen = model.projection.clone();
        let initial = model.weights.clone();
        let data = striped_image_set(2);
        let mut schedule = TrainSchedule::classical_default(0);
        schedule.outer_epochs = 1; // one fixed triple batch isolates descent
        schedule.inner_epochs = 30;
        let (trained, trace) =
            train_tanh_baseline(model, &data, &schedule, &mut ChaCha8Rng::seed_from_u64(94))
                .unwrap();
        assert_eq!(trace.rows.len(), 2 * 30);
        for layer in 1..=2 {
            let (first, last) = trace.layer_span(layer).unwrap();
            assert!(last <= first, "layer {layer}: {last} > {first}");
        }
        assert_eq!(trained.projection, frozen);
        assert_ne!(trained.weights[0], initial[0]);
        assert_ne!(trained.weights[1], initial[1]);
    }

    #[test]
    fn training_is_deterministic_given_the_seed() {
        let mut rng = ChaCha8Rng::seed_from_u64(95);
        let model = init_tanh_baseline(4, 1, &mut rng).unwrap();
        let data = striped_image_set(2);
        let mut schedule = TrainSchedule::classical_default(0);
        schedule.outer_epochs = 2;
        schedule.inner_epochs = 3;
        let run = |seed: u64| {
            train_tanh_baseline(
                model.clone(),
                &data,
                &schedule,
                &mut ChaCha8Rng::seed_from_u64(seed),
            )
            .unwrap()
        };
        assert_eq!(run(7).0, run(7).0);
    }

    #[test]
    fn shot_budgets_and_quantum_inputs_are_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(96);
        let model = init_tanh_baseline(4, 1, &mut rng).unwrap();
        let data = striped_image_set(2);
        let mut budgeted = TrainSchedule::classical_default(0);
        budgeted.shot_budget = Some(64);
        assert!(matches!(
            train_tanh_baseline(model.clone(), &data, &budgeted, &mut rng),
            Err(Error::Config(_))
        ));
        let quantum = TrainData::Quantum {
            states: vec![
                crate::statevector::StateVector::zero(1).unwrap(),
                crate::statevector::StateVector::zero(1).unwrap(),
            ],
            labels: vec![0, 1],
        };
        let schedule = TrainSchedule::classical_default(0);
        assert!(matches!(
            train_tanh_baseline(model, &quantum, &schedule, &mut rng),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn dimension_mismatches_are_rejected() {
        let model = passthrough_model(1);
        assert!(matches!(
            classical_baseline_forward(&model, &[0.0; 100]),
            Err(Error::Dimension { .. })
        ));
        let mut skewed = passthrough_model(1);
        skewed.weights[0] = Array2::eye(3);
        assert!(matches!(
            classical_baseline_forward(&skewed, &vec![0.0; CLASSICAL_INPUT_DIM]),
            Err(Error::Dimension { .. })
        ));
    }
}
