//! Contrastive training of the inter-layer weights, the dense readout
//! network, and evaluation.
//!
//! The representation objective never backpropagates through a circuit: the
//! measured features `g` of a layer are constants with respect to that
//! layer's weight matrix, so the gradient of the contrastive loss through
//! `h = π·tanh(Wg/2)` is a small closed-form expression. Training proceeds
//! layer by layer; each outer epoch re-collects features and re-draws
//! positive/negative partners, and the inner epochs are purely classical
//! gradient steps on those frozen features.

mod adam;
mod readout;
mod train;

pub use adam::AdamState;
pub use readout::{init_readout, mean_cross_entropy, train_readout, Activation, DenseNet};
pub use train::{
    evaluate, evaluate_one_step, joint_input, predict_one_step, rotate_image_90, train_layerwise,
    train_one_step, LabelEncoding, OneStepModel, TrainData,
};

use crate::error::{Error, Result};
use ndarray::Array2;

/// Hyperparameters of one Adam run.
#[derive(Debug, Clone, Copy)]
pub struct AdamHyper {
    pub learning_rate: f64,
    pub weight_decay: f64,
    /// Samples per gradient step; 0 means full batch.
    pub batch_size: usize,
}

/// Everything the training loops need besides data and model.
#[derive(Debug, Clone)]
pub struct TrainSchedule {
    /// Similarity temperature in the contrastive loss.
    pub tau: f64,
    /// Feature re-collection rounds per layer.
    pub outer_epochs: usize,
    /// Classical gradient steps per outer epoch.
    pub inner_epochs: usize,
    /// Inner-epoch optimizer (full batch regardless of `batch_size`).
    pub optimizer: AdamHyper,
    /// Readout optimizer (mini-batched).
    pub readout: AdamHyper,
    pub readout_epochs: usize,
    /// Per basis per layer; `None` = exact expectations.
    pub shot_budget: Option<u64>,
    pub master_seed: u64,
}

impl TrainSchedule {
    /// Defaults for the spin-chain experiments.
    pub fn quantum_default(master_seed: u64) -> Self {
        TrainSchedule {
            tau: 8.0,
            outer_epochs: 100,
            inner_epochs: 40,
            optimizer: AdamHyper {
                learning_rate: 1e-3,
                weight_decay: 0.0,
                batch_size: 0,
            },
            readout: AdamHyper {
                learning_rate: 1e-3,
                weight_decay: 1e-4,
                batch_size: 16,
            },
            readout_epochs: 500,
            shot_budget: None,
            master_seed,
        }
    }

    /// Defaults for the image experiments: longer feature collection,
    /// otherwise identical.
    pub fn classical_default(master_seed: u64) -> Self {
        TrainSchedule {
            outer_epochs: 200,
            ..Self::quantum_default(master_seed)
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0) {
            return Err(Error::Config(format!(
                "contrastive temperature must be positive, got {}",
                self.tau
            )));
        }
        if self.outer_epochs == 0 || self.inner_epochs == 0 {
            return Err(Error::Config("epoch counts must be at least 1".into()));
        }
        Ok(())
    }
}

/// One anchor/positive/negative bundle of same-length representations.
#[derive(Debug, Clone)]
pub struct ContrastiveTriple {
    pub anchor: Vec<f64>,
    pub positive: Vec<f64>,
    pub negative: Vec<f64>,
}

/// A layer's batch-mean loss measured at one inner-epoch step (under the
/// weights that step started from).
#[derive(Debug, Clone, PartialEq)]
pub struct LossTraceRow {
    pub layer: usize,
    pub outer_epoch: usize,
    pub inner_epoch: usize,
    pub mean_loss: f64,
}

/// Loss history of a whole training run, ordered (layer, outer, inner).
#[derive(Debug, Clone, Default)]
pub struct LossTrace {
    pub rows: Vec<LossTraceRow>,
}

impl LossTrace {
    /// First and last mean loss recorded for a layer, if any.
    pub fn layer_span(&self, layer: usize) -> Option<(f64, f64)> {
        let mut iter = self.rows.iter().filter(|r| r.layer == layer);
        let first = iter.next()?.mean_loss;
        let last = iter.last().map_or(first, |r| r.mean_loss);
        Some((first, last))
    }
}

/// `a·b / (‖a‖‖b‖)`; zero-norm inputs have no direction to compare.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Dimension {
            context: "cosine similarity",
            expected: a.len(),
            actual: b.len(),
        });
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroNormVector);
    }
    Ok(dot / (na * nb))
}

/// `ln(1 + e^x)` without overflow for large `x`.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Contrastive loss `ln(1 + exp((cs(h⁻,p) − cs(h⁺,p))/τ))`: small when the
/// positive aligns with the anchor better than the negative does.
pub fn contrastive_loss(triple: &ContrastiveTriple, tau: f64) -> Result<f64> {
    let cs_plus = cosine_similarity(&triple.positive, &triple.anchor)?;
    let cs_minus = cosine_similarity(&triple.negative, &triple.anchor)?;
    Ok(softplus((cs_minus - cs_plus) / tau))
}

/// Anchor branch of the gradient: trainable anchors pass through the same
/// weight matrix (two-step mode), frozen anchors are constants (one-step
/// mode).
#[derive(Debug, Clone, Copy)]
pub enum Anchor<'a> {
    /// Measured anchor features; the anchor representation is recomputed
    /// under the current weights and contributes to the gradient.
    Trainable(&'a [f64]),
    /// A fixed reference representation of length `d_h`.
    Frozen(&'a [f64]),
}

/// Gradient of `cs(u, v)` with respect to `u`.
fn cosine_grad_u(u: &[f64], v: &[f64], cs: f64) -> Vec<f64> {
    let nu: f64 = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nv: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    u.iter()
        .zip(v)
        .map(|(ui, vi)| vi / (nu * nv) - cs * ui / (nu * nu))
        .collect()
}

/// Loss and analytic `∂loss/∂W` of one triple through `h = π·tanh(Wg/2)`.
///
/// The feature vectors are treated as constants: `W` enters only through the
/// classical augmentation of each branch. With a [`Anchor::Trainable`] anchor
/// all three branches contribute; a [`Anchor::Frozen`] anchor contributes
/// nothing of its own.
pub fn contrastive_grad_w(
    weights: &Array2<f64>,
    anchor: Anchor,
    g_plus: &[f64],
    g_minus: &[f64],
    tau: f64,
) -> Result<(f64, Array2<f64>)> {
    contrastive_grad_core(
        weights,
        anchor,
        g_plus,
        g_minus,
        tau,
        &|w, g| crate::qfm::augment(w, g),
        &|hi| {
            let t = hi / std::f64::consts::PI;
            std::f64::consts::PI / 2.0 * (1.0 - t * t)
        },
    )
}

/// [`contrastive_grad_w`] for the plain squash `h = tanh(Wg)` used by the
/// classical reference network.
pub fn contrastive_grad_tanh(
    weights: &Array2<f64>,
    anchor: Anchor,
    g_plus: &[f64],
    g_minus: &[f64],
    tau: f64,
) -> Result<(f64, Array2<f64>)> {
    contrastive_grad_core(
        weights,
        anchor,
        g_plus,
        g_minus,
        tau,
        &tanh_map,
        &|hi| 1.0 - hi * hi,
    )
}

/// `tanh(Wg)` componentwise.
fn tanh_map(weights: &Array2<f64>, g: &[f64]) -> Result<Vec<f64>> {
    if g.len() != weights.ncols() {
        return Err(Error::Dimension {
            context: "feature vector for tanh squash",
            expected: weights.ncols(),
            actual: g.len(),
        });
    }
    let gv = ndarray::ArrayView1::from(g);
    Ok(weights.dot(&gv).iter().map(|x| x.tanh()).collect())
}

/// Shared triple gradient: `apply` maps features through the squash under the
/// current weights, `slope` gives `dh_i/d(Wg)_i` as a function of `h_i`.
fn contrastive_grad_core(
    weights: &Array2<f64>,
    anchor: Anchor,
    g_plus: &[f64],
    g_minus: &[f64],
    tau: f64,
    apply: &dyn Fn(&Array2<f64>, &[f64]) -> Result<Vec<f64>>,
    slope_of: &dyn Fn(f64) -> f64,
) -> Result<(f64, Array2<f64>)> {
    if !(tau > 0.0) {
        return Err(Error::Config(format!(
            "contrastive temperature must be positive, got {tau}"
        )));
    }
    let h_plus = apply(weights, g_plus)?;
    let h_minus = apply(weights, g_minus)?;
    let p = match anchor {
        Anchor::Trainable(g) => apply(weights, g)?,
        Anchor::Frozen(rep) => {
            if rep.len() != weights.nrows() {
                return Err(Error::Dimension {
                    context: "frozen anchor representation",
                    expected: weights.nrows(),
                    actual: rep.len(),
                });
            }
            rep.to_vec()
        }
    };

    let cs_plus = cosine_similarity(&h_plus, &p)?;
    let cs_minus = cosine_similarity(&h_minus, &p)?;
    let delta = (cs_minus - cs_plus) / tau;
    let loss = softplus(delta);
    // d loss / d delta, then the 1/τ from delta itself.
    let coeff = 1.0 / (1.0 + (-delta).exp()) / tau;

    let mut grad = Array2::zeros(weights.raw_dim());
    let mut accumulate = |dh: &[f64], h: &[f64], g: &[f64]| {
        for i in 0..weights.nrows() {
            let row_scale = dh[i] * slope_of(h[i]);
            for (j, &gj) in g.iter().enumerate() {
                grad[[i, j]] += row_scale * gj;
            }
        }
    };

    let dh_minus: Vec<f64> = cosine_grad_u(&h_minus, &p, cs_minus)
        .iter()
        .map(|d| coeff * d)
        .collect();
    accumulate(&dh_minus, &h_minus, g_minus);
    let dh_plus: Vec<f64> = cosine_grad_u(&h_plus, &p, cs_plus)
        .iter()
        .map(|d| -coeff * d)
        .collect();
    accumulate(&dh_plus, &h_plus, g_plus);
    if let Anchor::Trainable(g_anchor) = anchor {
        let dm = cosine_grad_u(&p, &h_minus, cs_minus);
        let dp = cosine_grad_u(&p, &h_plus, cs_plus);
        let d_anchor: Vec<f64> = dm
            .iter()
            .zip(&dp)
            .map(|(m, q)| coeff * (m - q))
            .collect();
        accumulate(&d_anchor, &p, g_anchor);
    }
    Ok((loss, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn cosine_similarity_known_values() {
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[1.0, 0.0]).unwrap(), 1.0);
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        let cs = cosine_similarity(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
        assert!((cs - 32.0 / (14.0f64.sqrt() * 77.0f64.sqrt())).abs() < 1e-12);
        assert!((cs - 0.97463).abs() < 1e-5);
        assert!(matches!(
            cosine_similarity(&[0.0, 0.0], &[1.0, 0.0]),
            Err(Error::ZeroNormVector)
        ));
        assert!(matches!(
            cosine_similarity(&[1.0], &[1.0, 2.0]),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn contrastive_loss_known_values() {
        let triple = ContrastiveTriple {
            anchor: vec![1.0, 0.0],
            positive: vec![0.0, 1.0],
            negative: vec![0.0, 1.0],
        };
        // Equal similarities → ln 2.
        assert!((contrastive_loss(&triple, 8.0).unwrap() - std::f64::consts::LN_2).abs() < 1e-12);
        // cs difference −2 (positive aligned, negative opposed) at τ = 8.
        let aligned = ContrastiveTriple {
            anchor: vec![1.0, 0.0],
            positive: vec![1.0, 0.0],
            negative: vec![-1.0, 0.0],
        };
        let loss = contrastive_loss(&aligned, 8.0).unwrap();
        assert!((loss - (-0.25f64).exp().ln_1p()).abs() < 1e-12);
        assert!((loss - 0.57594).abs() < 1e-5);
        // The mirrored triple gives the +2 branch.
        let opposed = ContrastiveTriple {
            anchor: vec![1.0, 0.0],
            positive: vec![-1.0, 0.0],
            negative: vec![1.0, 0.0],
        };
        let loss = contrastive_loss(&opposed, 8.0).unwrap();
        assert!((loss - 0.25f64.exp().ln_1p()).abs() < 1e-12);
        assert!((loss - 0.82594).abs() < 1e-5);
    }

    #[test]
    fn loss_bounds_hold_for_random_triples() {
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        let cap = (2.0f64 / 8.0).exp().ln_1p();
        for _ in 0..200 {
            let v = |rng: &mut ChaCha8Rng| -> Vec<f64> {
                (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect()
            };
            let triple = ContrastiveTriple {
                anchor: v(&mut rng),
                positive: v(&mut rng),
                negative: v(&mut rng),
            };
            let loss = contrastive_loss(&triple, 8.0).unwrap();
            assert!(loss > 0.0 && loss <= cap + 1e-12);
        }
    }

    #[test]
    fn symmetric_triple_has_zero_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(52);
        let w = Array2::from_shape_fn((4, 4), |_| rng.gen_range(-1.0..1.0));
        let g: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let a: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (loss, grad) = contrastive_grad_w(&w, Anchor::Trainable(&a), &g, &g, 8.0).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-12);
        assert!(grad.iter().all(|v| v.abs() < 1e-12));
        // Rescaling the shared features preserves the symmetry.
        let scaled: Vec<f64> = g.iter().map(|x| 3.0 * x).collect();
        let (_, grad) =
            contrastive_grad_w(&w, Anchor::Trainable(&a), &scaled, &scaled, 8.0).unwrap();
        assert!(grad.iter().all(|v| v.abs() < 1e-12));
    }

    /// Central finite differences of the loss as an independent oracle for
    /// the analytic gradient, exercised for both anchor branches.
    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        for case in 0..10 {
            let (dh, dg) = (3 + case % 3, 3 + (case / 3) % 3);
            let w = Array2::from_shape_fn((dh, dg), |_| rng.gen_range(-1.0..1.0));
            let v = |rng: &mut ChaCha8Rng, len: usize| -> Vec<f64> {
                (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect()
            };
            let g_a = v(&mut rng, dg);
            let g_p = v(&mut rng, dg);
            let g_m = v(&mut rng, dg);
            let frozen = v(&mut rng, dh);
            let anchors = [Anchor::Trainable(&g_a), Anchor::Frozen(&frozen)];
            for anchor in anchors {
                let (_, grad) = contrastive_grad_w(&w, anchor, &g_p, &g_m, 8.0).unwrap();
                let step = 1e-5;
                for i in 0..dh {
                    for j in 0..dg {
                        let mut wp = w.clone();
                        wp[[i, j]] += step;
                        let (lp, _) =
                            contrastive_grad_w(&wp, anchor, &g_p, &g_m, 8.0).unwrap();
                        let mut wm = w.clone();
                        wm[[i, j]] -= step;
                        let (lm, _) =
                            contrastive_grad_w(&wm, anchor, &g_p, &g_m, 8.0).unwrap();
                        let fd = (lp - lm) / (2.0 * step);
                        let scale = fd.abs().max(grad[[i, j]].abs()).max(1e-8);
                        assert!(
                            (fd - grad[[i, j]]).abs() / scale <= 1e-5,
                            "mismatch at ({i},{j}): analytic {} vs fd {fd}",
                            grad[[i, j]]
                        );
                    }
                }
            }
        }
    }

    /// Same oracle for the tanh-squash variant used by the classical
    /// reference network.
    #[test]
    fn tanh_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(54);
        for _ in 0..6 {
            let w = Array2::from_shape_fn((4, 3), |_| rng.gen_range(-1.0..1.0));
            let v = |rng: &mut ChaCha8Rng, len: usize| -> Vec<f64> {
                (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect()
            };
            let g_a = v(&mut rng, 3);
            let g_p = v(&mut rng, 3);
            let g_m = v(&mut rng, 3);
            let frozen = v(&mut rng, 4);
            for anchor in [Anchor::Trainable(&g_a), Anchor::Frozen(&frozen)] {
                let (_, grad) = contrastive_grad_tanh(&w, anchor, &g_p, &g_m, 8.0).unwrap();
                let step = 1e-5;
                for i in 0..4 {
                    for j in 0..3 {
                        let mut wp = w.clone();
                        wp[[i, j]] += step;
                        let (lp, _) =
                            contrastive_grad_tanh(&wp, anchor, &g_p, &g_m, 8.0).unwrap();
                        let mut wm = w.clone();
                        wm[[i, j]] -= step;
                        let (lm, _) =
                            contrastive_grad_tanh(&wm, anchor, &g_p, &g_m, 8.0).unwrap();
                        let fd = (lp - lm) / (2.0 * step);
                        let scale = fd.abs().max(grad[[i, j]].abs()).max(1e-8);
                        assert!((fd - grad[[i, j]]).abs() / scale <= 1e-5);
                    }
                }
            }
        }
    }

    #[test]
    fn degenerate_zero_representation_is_an_error() {
        let w = Array2::zeros((3, 3));
        let g = [1.0, 2.0, 3.0];
        assert!(matches!(
            contrastive_grad_w(&w, Anchor::Trainable(&g), &g, &g, 8.0),
            Err(Error::ZeroNormVector)
        ));
    }

    #[test]
    fn schedule_validation_rejects_bad_values() {
        let mut s = TrainSchedule::quantum_default(1);
        assert!(s.validate().is_ok());
        s.tau = 0.0;
        assert!(s.validate().is_err());
        let mut s = TrainSchedule::classical_default(1);
        assert_eq!(s.outer_epochs, 200);
        s.inner_epochs = 0;
        assert!(s.validate().is_err());
    }
}
