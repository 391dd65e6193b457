//! Forward evaluation: run each layer's circuits, measure multi-basis `Z`
//! features, and chain the augmented outputs into the next layer.

use super::{
    augment, basis_rotation, build_embedding, build_preprocessing, IqfmModel, QfmMode,
    Representation, CLASSICAL_INPUT_DIM, MODULE_SEGMENT,
};
use crate::error::{Error, Result};
use crate::statevector::StateVector;
use ndarray::ArrayView1;
use rand::Rng;

/// Single-qubit `Z` readout of one prepared state in the bare basis plus one
/// rotated basis per `theta` row.
///
/// Row `k` rotates a copy of the state by `RX(θᵏ_j)` on every qubit before
/// measuring, and the per-basis blocks concatenate in order (bare first), so
/// the output has `(rows + 1) · n` components. `shots = None` returns exact
/// expectations; `Some(s)` draws `s` samples per basis from this state.
pub fn extract_features<R: Rng + ?Sized>(
    state: &StateVector,
    theta_rows: &[&[f64]],
    shots: Option<u64>,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let n = state.n_qubits();
    let measure = |state: &StateVector, rng: &mut R| -> Result<Vec<f64>> {
        match shots {
            None => Ok(state.z_expectations()),
            Some(s) => Ok(state.sample_counts(s, rng)?.z_estimates()),
        }
    };
    let mut g = measure(state, rng)?;
    for row in theta_rows {
        if row.len() != n {
            return Err(Error::Dimension {
                context: "basis rotation angles",
                expected: n,
                actual: row.len(),
            });
        }
        let rotated = state.run_circuit(&basis_rotation(row))?;
        g.extend(measure(&rotated, rng)?);
    }
    Ok(g)
}

/// Full pass over a quantum input.
///
/// Each layer runs on an independently prepared copy of `input`: optional
/// per-qubit `RX` noise (fresh draws per layer per call when `noise_p > 0`),
/// then for layers 2.. the embedding of the previous augmented vector, then
/// that layer's preprocessing, then feature extraction and augmentation. A
/// single-layer model never constructs an embedding circuit.
pub fn forward_quantum<R: Rng + ?Sized>(
    model: &IqfmModel,
    input: &StateVector,
    noise_p: f64,
    shots: Option<u64>,
    rng: &mut R,
) -> Result<Representation> {
    forward_quantum_upto(model, input, noise_p, shots, rng, model.layers)
}

/// [`forward_quantum`] truncated after `upto` layers; layer-wise training
/// stops at the layer being trained since deeper features depend on weights
/// that are still moving.
pub(crate) fn forward_quantum_upto<R: Rng + ?Sized>(
    model: &IqfmModel,
    input: &StateVector,
    noise_p: f64,
    shots: Option<u64>,
    rng: &mut R,
    upto: usize,
) -> Result<Representation> {
    debug_assert!((1..=model.layers).contains(&upto));
    if model.mode != QfmMode::Quantum {
        return Err(Error::Config(
            "forward_quantum requires a quantum-mode model".into(),
        ));
    }
    if input.n_qubits() != model.n_qubits {
        return Err(Error::Dimension {
            context: "forward input state",
            expected: model.n_qubits,
            actual: input.n_qubits(),
        });
    }
    if !(0.0..=1.0).contains(&noise_p) {
        return Err(Error::NoiseStrength(noise_p));
    }
    let mut features = Vec::with_capacity(upto);
    let mut layers = Vec::with_capacity(upto);
    let mut prev_h: Option<Vec<f64>> = None;
    for l in 1..=upto {
        let mut state = input.clone();
        if noise_p > 0.0 {
            state = state.apply_rx_noise(noise_p, rng)?;
        }
        if let Some(h) = &prev_h {
            state = state.run_circuit(&build_embedding(h, model.n_qubits, model.embed_depth)?)?;
        }
        state = state.run_circuit(&build_preprocessing(model, l)?)?;
        let rows: Vec<&[f64]> = model.layer_angles[l - 1]
            .theta
            .iter()
            .map(Vec::as_slice)
            .collect();
        let g = extract_features(&state, &rows, shots, rng)?;
        let h = augment(&model.weights[l - 1], &g)?;
        prev_h = Some(h.clone());
        features.push(g);
        layers.push(h);
    }
    Ok(Representation { features, layers })
}

/// Full pass over a raw classical vector.
///
/// The input is projected once through the frozen map (`h₀ = W₀·image`, no
/// squashing), then each layer splits the running vector into 16-component
/// segments, drives one 4-qubit embedding-only map per segment from `|0000⟩`,
/// and concatenates the per-module features in module order before the usual
/// augmentation.
pub fn forward_classical<R: Rng + ?Sized>(
    model: &IqfmModel,
    image: &[f64],
    shots: Option<u64>,
    rng: &mut R,
) -> Result<Representation> {
    forward_classical_upto(model, image, shots, rng, model.layers)
}

/// [`forward_classical`] truncated after `upto` layers.
pub(crate) fn forward_classical_upto<R: Rng + ?Sized>(
    model: &IqfmModel,
    image: &[f64],
    shots: Option<u64>,
    rng: &mut R,
    upto: usize,
) -> Result<Representation> {
    debug_assert!((1..=model.layers).contains(&upto));
    if model.mode != QfmMode::ClassicalModular {
        return Err(Error::Config(
            "forward_classical requires a modular-mode model".into(),
        ));
    }
    if image.len() != CLASSICAL_INPUT_DIM {
        return Err(Error::Dimension {
            context: "classical input vector",
            expected: CLASSICAL_INPUT_DIM,
            actual: image.len(),
        });
    }
    let projection = model
        .input_projection
        .as_ref()
        .expect("modular model carries an input projection");
    let mut prev: Vec<f64> = projection.dot(&ArrayView1::from(image)).to_vec();
    let mut features = Vec::with_capacity(upto);
    let mut layers = Vec::with_capacity(upto);
    for l in 1..=upto {
        let theta = &model.layer_angles[l - 1].theta;
        let mut g = Vec::with_capacity(model.feature_dim);
        for (m, segment) in prev.chunks_exact(MODULE_SEGMENT).enumerate() {
            let circuit = build_embedding(segment, model.n_qubits, model.embed_depth)?;
            let state = StateVector::zero(model.n_qubits)?.run_circuit(&circuit)?;
            let cols = 4 * m..4 * (m + 1);
            let rows: Vec<&[f64]> = theta.iter().map(|row| &row[cols.clone()]).collect();
            g.extend(extract_features(&state, &rows, shots, rng)?);
        }
        let h = augment(&model.weights[l - 1], &g)?;
        prev = h.clone();
        features.push(g);
        layers.push(h);
    }
    Ok(Representation { features, layers })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qfm::{init_model, IqfmConfig};
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_state(n: usize, seed: u64) -> StateVector {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut amps: Vec<Complex64> = (0..1usize << n)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        for a in &mut amps {
            *a /= norm;
        }
        StateVector::from_amplitudes(n, amps).unwrap()
    }

    #[test]
    fn bare_basis_reads_eigenstate_directly() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let state = StateVector::zero(3).unwrap();
        let theta = [std::f64::consts::PI; 3];
        let g = extract_features(&state, &[&theta], None, &mut rng).unwrap();
        // Bare block on |000⟩ is all +1; an RX(π) row flips every Z.
        for (i, v) in g.iter().enumerate() {
            let want = if i < 3 { 1.0 } else { -1.0 };
            assert!((v - want).abs() < 1e-12);
        }
    }

    #[test]
    fn ten_thousand_shots_track_exact_features() {
        let state = random_state(8, 22);
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let theta: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..8).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect())
            .collect();
        let rows: Vec<&[f64]> = theta.iter().map(Vec::as_slice).collect();
        let exact = extract_features(&state, &rows, None, &mut rng).unwrap();
        let sampled = extract_features(&state, &rows, Some(10_000), &mut rng).unwrap();
        let max_err = exact
            .iter()
            .zip(&sampled)
            .map(|(e, s)| (e - s).abs())
            .fold(0.0f64, f64::max);
        assert!(max_err <= 0.05, "max deviation {max_err}");
    }

    #[test]
    fn quantum_representation_has_spec_dimensions() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let model = init_model(&IqfmConfig::quantum(8, 5), &mut rng).unwrap();
        let rep =
            forward_quantum(&model, &random_state(8, 25), 0.0, None, &mut rng).unwrap();
        assert_eq!(rep.layers.len(), 5);
        assert!(rep.layers.iter().all(|h| h.len() == 32));
        assert!(rep.features.iter().all(|g| g.len() == 32));
        assert_eq!(rep.concatenated().len(), 160);
    }

    #[test]
    fn exact_noiseless_pass_is_bit_identical() {
        let mut rng = ChaCha8Rng::seed_from_u64(26);
        let model = init_model(&IqfmConfig::quantum(4, 3), &mut rng).unwrap();
        let state = random_state(4, 27);
        // Different RNGs on purpose: this path must consume no randomness.
        let a = forward_quantum(&model, &state, 0.0, None, &mut ChaCha8Rng::seed_from_u64(1))
            .unwrap();
        let b = forward_quantum(&model, &state, 0.0, None, &mut ChaCha8Rng::seed_from_u64(2))
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn seeded_noise_and_shots_reproduce() {
        let mut rng = ChaCha8Rng::seed_from_u64(28);
        let model = init_model(&IqfmConfig::quantum(4, 2), &mut rng).unwrap();
        let state = random_state(4, 29);
        let run = |seed: u64| {
            forward_quantum(
                &model,
                &state,
                0.15,
                Some(64),
                &mut ChaCha8Rng::seed_from_u64(seed),
            )
            .unwrap()
        };
        assert_eq!(run(5), run(5));
        assert_ne!(run(5), run(6));
    }

    #[test]
    fn outputs_respect_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(30);
        let model = init_model(&IqfmConfig::quantum(5, 4), &mut rng).unwrap();
        let rep = forward_quantum(&model, &random_state(5, 31), 0.0, None, &mut rng).unwrap();
        for g in &rep.features {
            assert!(g.iter().all(|v| v.abs() <= 1.0 + 1e-12));
        }
        for h in &rep.layers {
            assert!(h.iter().all(|v| v.abs() < std::f64::consts::PI));
        }
    }

    #[test]
    fn later_weights_cannot_reach_earlier_layers() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let model = init_model(&IqfmConfig::quantum(4, 4), &mut rng).unwrap();
        let state = random_state(4, 33);
        let base = forward_quantum(&model, &state, 0.0, None, &mut rng).unwrap();
        let mut bumped = model.clone();
        bumped.weights[2][[0, 0]] += 0.5;
        let rep = forward_quantum(&bumped, &state, 0.0, None, &mut rng).unwrap();
        assert_eq!(rep.layers[0], base.layers[0]);
        assert_eq!(rep.layers[1], base.layers[1]);
        assert_eq!(rep.features[2], base.features[2]);
        assert_ne!(rep.layers[2], base.layers[2]);
        assert_ne!(rep.features[3], base.features[3]);
    }

    #[test]
    fn forward_rejects_bad_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        let model = init_model(&IqfmConfig::quantum(4, 2), &mut rng).unwrap();
        let wrong = StateVector::zero(3).unwrap();
        assert!(matches!(
            forward_quantum(&model, &wrong, 0.0, None, &mut rng),
            Err(Error::Dimension { .. })
        ));
        let state = StateVector::zero(4).unwrap();
        assert!(matches!(
            forward_quantum(&model, &state, -0.1, None, &mut rng),
            Err(Error::NoiseStrength(_))
        ));
        assert!(matches!(
            forward_quantum(&model, &state, 1.5, None, &mut rng),
            Err(Error::NoiseStrength(_))
        ));
        assert!(matches!(
            forward_classical(&model, &[0.0; CLASSICAL_INPUT_DIM], None, &mut rng),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn classical_representation_has_spec_dimensions() {
        let mut rng = ChaCha8Rng::seed_from_u64(35);
        let model = init_model(&IqfmConfig::classical(16, 4), &mut rng).unwrap();
        let image = vec![0.5; CLASSICAL_INPUT_DIM];
        let rep = forward_classical(&model, &image, None, &mut rng).unwrap();
        assert_eq!(rep.concatenated().len(), 64);
        let wide = init_model(&IqfmConfig::classical(32, 2), &mut rng).unwrap();
        let rep = forward_classical(&wide, &image, None, &mut rng).unwrap();
        assert!(rep.layers.iter().all(|h| h.len() == 32));
        assert!(matches!(
            forward_classical(&wide, &[0.0; 10], None, &mut rng),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn zero_image_reaches_known_module_features() {
        let mut rng = ChaCha8Rng::seed_from_u64(36);
        let model = init_model(&IqfmConfig::classical(32, 1), &mut rng).unwrap();
        let rep = forward_classical(&model, &[0.0; CLASSICAL_INPUT_DIM], None, &mut rng).unwrap();
        // h₀ = 0, so each module sees zero angles: an even Hadamard power
        // leaves |0000⟩ alone, the bare basis reads +1, and basis k reads
        // cos θᵏ_j on its own theta columns.
        let theta = &model.layer_angles[0].theta;
        let g = &rep.features[0];
        for m in 0..2 {
            let block = &g[16 * m..16 * (m + 1)];
            assert!(block[..4].iter().all(|v| (v - 1.0).abs() < 1e-12));
            for k in 0..3 {
                for j in 0..4 {
                    let want = theta[k][4 * m + j].cos();
                    assert!((block[4 * (k + 1) + j] - want).abs() < 1e-12);
                }
            }
        }
    }
}
