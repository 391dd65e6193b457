//! Dense feedforward readout: two ReLU hidden layers into a softmax
//! cross-entropy head, trained with mini-batched Adam.

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::Rng;

use super::{AdamState, TrainSchedule};
use crate::error::{Error, Result};

/// Per-layer nonlinearity tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Softmax,
}

/// Fully connected classifier `dims[0] → dims[1] → … → n_classes`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseNet {
    pub dims: Vec<usize>,
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
    pub activations: Vec<Activation>,
}

impl DenseNet {
    pub fn n_classes(&self) -> usize {
        *self.dims.last().expect("net has at least one layer")
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dims[0] {
            return Err(Error::Dimension {
                context: "readout input",
                expected: self.dims[0],
                actual: x.len(),
            });
        }
        Ok(())
    }

    /// Pre-activation values of every layer, hidden activations applied.
    /// Returns `(post_activation_per_hidden_layer, logits)`.
    fn hidden_pass(&self, x: &[f64]) -> (Vec<Array1<f64>>, Array1<f64>) {
        let mut activations: Vec<Array1<f64>> = Vec::with_capacity(self.weights.len());
        let mut current = Array1::from(x.to_vec());
        for (idx, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut z = w.dot(&current) + b;
            if idx + 1 < self.weights.len() {
                z.mapv_inplace(|v| v.max(0.0));
                activations.push(z.clone());
            }
            current = z;
        }
        (activations, current)
    }

    /// Raw class scores before the softmax.
    pub fn logits(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        Ok(self.hidden_pass(x).1.to_vec())
    }

    /// Softmax class probabilities.
    pub fn probabilities(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(softmax(&self.logits(x)?))
    }

    /// Most probable class; equal scores resolve to the lowest index.
    pub fn predict(&self, x: &[f64]) -> Result<u32> {
        let logits = self.logits(x)?;
        let mut best = 0usize;
        for (k, &v) in logits.iter().enumerate() {
            if v > logits[best] {
                best = k;
            }
        }
        Ok(best as u32)
    }
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|e| e / sum).collect()
}

/// Glorot-uniform net with zero biases and the standard activation pattern
/// (ReLU on every hidden layer, softmax head).
pub fn init_readout<R: Rng + ?Sized>(
    input_dim: usize,
    hidden: &[usize],
    n_classes: usize,
    rng: &mut R,
) -> Result<DenseNet> {
    if input_dim == 0 || n_classes == 0 || hidden.iter().any(|&h| h == 0) {
        return Err(Error::Config("readout layer widths must be positive".into()));
    }
    let mut dims = vec![input_dim];
    dims.extend_from_slice(hidden);
    dims.push(n_classes);
    let mut weights = Vec::with_capacity(dims.len() - 1);
    let mut biases = Vec::with_capacity(dims.len() - 1);
    for pair in dims.windows(2) {
        let (fan_in, fan_out) = (pair[0], pair[1]);
        let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
        weights.push(Array2::from_shape_fn((fan_out, fan_in), |_| {
            rng.gen_range(-bound..bound)
        }));
        biases.push(Array1::zeros(fan_out));
    }
    let mut activations = vec![Activation::Relu; dims.len() - 2];
    activations.push(Activation::Softmax);
    Ok(DenseNet {
        dims,
        weights,
        biases,
        activations,
    })
}

/// Mean softmax cross-entropy of the net over a labeled set.
pub fn mean_cross_entropy(net: &DenseNet, inputs: &[Vec<f64>], labels: &[u32]) -> Result<f64> {
    if inputs.is_empty() {
        return Err(Error::Config("cross entropy of an empty set".into()));
    }
    let mut total = 0.0;
    for (x, &y) in inputs.iter().zip(labels) {
        let probs = net.probabilities(x)?;
        total -= probs[y as usize].max(f64::MIN_POSITIVE).ln();
    }
    Ok(total / inputs.len() as f64)
}

/// Train a fresh two-hidden-layer readout (64/64 units) on concatenated
/// representations.
///
/// Every epoch shuffles the sample order and sweeps mini-batches of the
/// configured size (a trailing smaller batch included); each batch takes one
/// Adam step on the batch-mean gradient.
pub fn train_readout<R: Rng + ?Sized>(
    inputs: &[Vec<f64>],
    labels: &[u32],
    n_classes: usize,
    schedule: &TrainSchedule,
    rng: &mut R,
) -> Result<DenseNet> {
    if inputs.is_empty() {
        return Err(Error::Config("readout training set is empty".into()));
    }
    if inputs.len() != labels.len() {
        return Err(Error::Dimension {
            context: "readout labels",
            expected: inputs.len(),
            actual: labels.len(),
        });
    }
    if let Some(&bad) = labels.iter().find(|&&y| y as usize >= n_classes) {
        return Err(Error::Config(format!(
            "label {bad} outside the {n_classes}-class range"
        )));
    }
    let input_dim = inputs[0].len();
    if let Some(x) = inputs.iter().find(|x| x.len() != input_dim) {
        return Err(Error::Dimension {
            context: "readout inputs",
            expected: input_dim,
            actual: x.len(),
        });
    }

    let mut net = init_readout(input_dim, &[64, 64], n_classes, rng)?;
    let hyper = schedule.readout;
    let batch = if hyper.batch_size == 0 {
        inputs.len()
    } else {
        hyper.batch_size
    };
    let mut w_states: Vec<_> = net.weights.iter().map(AdamState::for_param).collect();
    let mut b_states: Vec<_> = net.biases.iter().map(AdamState::for_param).collect();
    let mut order: Vec<usize> = (0..inputs.len()).collect();

    for _epoch in 0..schedule.readout_epochs {
        order.shuffle(rng);
        for chunk in order.chunks(batch) {
            let mut grad_w: Vec<Array2<f64>> =
                net.weights.iter().map(|w| Array2::zeros(w.raw_dim())).collect();
            let mut grad_b: Vec<Array1<f64>> =
                net.biases.iter().map(|b| Array1::zeros(b.raw_dim())).collect();
            for &i in chunk {
                backprop(&net, &inputs[i], labels[i], &mut grad_w, &mut grad_b);
            }
            let scale = 1.0 / chunk.len() as f64;
            for layer in 0..net.weights.len() {
                grad_w[layer] *= scale;
                grad_b[layer] *= scale;
                w_states[layer].step(
                    &mut net.weights[layer],
                    &grad_w[layer],
                    hyper.learning_rate,
                    hyper.weight_decay,
                )?;
                // Decay applies to weights only; biases follow plain Adam.
                b_states[layer].step(
                    &mut net.biases[layer],
                    &grad_b[layer],
                    hyper.learning_rate,
                    0.0,
                )?;
            }
        }
    }
    Ok(net)
}

/// Accumulate one sample's cross-entropy gradient into the buffers.
fn backprop(
    net: &DenseNet,
    x: &[f64],
    label: u32,
    grad_w: &mut [Array2<f64>],
    grad_b: &mut [Array1<f64>],
) {
    let (hidden, logits) = net.hidden_pass(x);
    let probs = softmax(logits.as_slice().expect("contiguous"));
    // Softmax + cross-entropy collapses to probs − one-hot at the head.
    let mut delta = Array1::from(probs);
    delta[label as usize] -= 1.0;

    let input = Array1::from(x.to_vec());
    for layer in (0..net.weights.len()).rev() {
        let below: &Array1<f64> = if layer == 0 { &input } else { &hidden[layer - 1] };
        for (i, &d) in delta.iter().enumerate() {
            grad_b[layer][i] += d;
            for (j, &a) in below.iter().enumerate() {
                grad_w[layer][[i, j]] += d * a;
            }
        }
        if layer > 0 {
            // Push through the transpose, then gate by this layer's ReLU.
            let mut next = net.weights[layer].t().dot(&delta);
            for (v, &a) in next.iter_mut().zip(hidden[layer - 1].iter()) {
                if a <= 0.0 {
                    *v = 0.0;
                }
            }
            delta = next;
        }
    }
}
