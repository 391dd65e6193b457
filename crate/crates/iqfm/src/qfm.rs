//! Iterative quantum feature maps: a stack of shallow, fixed-angle circuits
//! whose layers are chained classically instead of coherently.
//!
//! Each layer prepares a fresh copy of the input, runs a shallow circuit, and
//! measures single-qubit `Z` in several bases. The resulting feature vector is
//! squashed through a trainable linear map (`h = π·tanh(Wg/2)`) and re-enters
//! the next layer as rotation angles of a data-embedding circuit. Circuit
//! angles are drawn once at construction and never trained; all learning
//! happens in the classical maps between layers.
//!
//! Two wirings are supported:
//!
//! * **Quantum input** ([`QfmMode::Quantum`]): the sample is an `n`-qubit
//!   state. Layer 1 applies a random preprocessing circuit directly; layers
//!   2.. first embed the previous layer's augmented features, then preprocess.
//! * **Modular classical input** ([`QfmMode::ClassicalModular`]): the sample
//!   is a 784-component vector, projected once through a frozen matrix to
//!   width `M` and then processed by `M/16` independent 4-qubit maps per
//!   layer, embedding only (no preprocessing).

mod checkpoint;
mod circuits;
mod forward;

pub use checkpoint::{load_model, save_model};
pub use circuits::{basis_rotation, build_embedding, build_preprocessing};
pub use forward::{extract_features, forward_classical, forward_quantum};
pub(crate) use forward::{forward_classical_upto, forward_quantum_upto};

use crate::error::{Error, Result, MAX_QUBITS};
use ndarray::Array2;
use rand::Rng;

/// Input-side wiring of the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QfmMode {
    Quantum,
    ClassicalModular,
}

impl QfmMode {
    pub(crate) fn id(self) -> u8 {
        match self {
            QfmMode::Quantum => 0,
            QfmMode::ClassicalModular => 1,
        }
    }

    pub(crate) fn from_id(id: u8) -> Option<Self> {
        match id {
            0 => Some(QfmMode::Quantum),
            1 => Some(QfmMode::ClassicalModular),
            _ => None,
        }
    }
}

/// Frozen rotation angles of one layer, exactly as drawn from Uniform[0, 2π).
///
/// The circuit builders apply the sign/factor conversion between these raw
/// draws and gate-kernel angles; the tables themselves stay in the drawn
/// range so a checkpoint fully documents the distribution.
///
/// Shapes: `alpha`/`beta` are `[d1][n]` and populated for layer 1 only;
/// `gamma`/`epsilon`/`zeta`/`eta` are `[d2][n]`; `theta` is `[B][w]` where
/// `w` is the per-layer qubit budget — `n` for quantum mode, `4·(M/16)` for
/// modular mode (module `m` owns columns `4m..4m+4`).
#[derive(Debug, Clone, PartialEq)]
pub struct QfmLayerAngles {
    pub alpha: Vec<Vec<f64>>,
    pub beta: Vec<Vec<f64>>,
    pub gamma: Vec<Vec<f64>>,
    pub epsilon: Vec<Vec<f64>>,
    pub zeta: Vec<Vec<f64>>,
    pub eta: Vec<Vec<f64>>,
    pub theta: Vec<Vec<f64>>,
}

/// Model shape parameters; see the constructors for the shipped defaults.
#[derive(Debug, Clone)]
pub struct IqfmConfig {
    pub mode: QfmMode,
    pub n_qubits: usize,
    pub layers: usize,
    /// Extra measurement bases beyond the bare `Z` basis.
    pub extra_bases: usize,
    /// Entangling-block repetitions in the layer-1-only preprocessing stage.
    pub depth1: usize,
    /// Entangling-block repetitions in the every-layer preprocessing stage.
    pub depth2: usize,
    /// Modular-mode width `M`; ignored in quantum mode.
    pub width: usize,
}

impl IqfmConfig {
    /// Quantum-input defaults: four measurement bases, preprocessing depths 2.
    pub fn quantum(n_qubits: usize, layers: usize) -> Self {
        IqfmConfig {
            mode: QfmMode::Quantum,
            n_qubits,
            layers,
            extra_bases: 3,
            depth1: 2,
            depth2: 2,
            width: 0,
        }
    }

    /// Modular classical-input defaults: width-`M` projection feeding
    /// `M/16` four-qubit maps per layer.
    pub fn classical(width: usize, layers: usize) -> Self {
        IqfmConfig {
            mode: QfmMode::ClassicalModular,
            n_qubits: 4,
            layers,
            extra_bases: 3,
            depth1: 0,
            depth2: 0,
            width,
        }
    }
}

/// Dimension of the classical input vector in modular mode.
pub const CLASSICAL_INPUT_DIM: usize = 784;

/// Per-module segment length in modular mode: a 4-qubit, depth-4 embedding
/// consumes exactly 16 angles.
pub const MODULE_SEGMENT: usize = 16;

/// A fully constructed model: frozen angle tables plus trainable weights.
#[derive(Debug, Clone)]
pub struct IqfmModel {
    pub mode: QfmMode,
    pub n_qubits: usize,
    pub layers: usize,
    pub extra_bases: usize,
    pub depth1: usize,
    pub depth2: usize,
    /// Blocks in the data-embedding circuit; each block consumes `n` angles.
    pub embed_depth: usize,
    /// Measured-feature dimension per layer.
    pub feature_dim: usize,
    /// Augmented dimension per layer (equals `feature_dim`; the embedding of
    /// the next layer consumes all of it).
    pub augmented_dim: usize,
    /// One table per layer, index 0 = layer 1.
    pub layer_angles: Vec<QfmLayerAngles>,
    /// Trainable maps `W_1..W_L`, each `augmented_dim × feature_dim`.
    pub weights: Vec<Array2<f64>>,
    /// Frozen 784→M projection; present in modular mode only.
    pub input_projection: Option<Array2<f64>>,
}

impl IqfmModel {
    /// Number of parallel 4-qubit maps per layer (1 in quantum mode).
    pub fn modules(&self) -> usize {
        match self.mode {
            QfmMode::Quantum => 1,
            QfmMode::ClassicalModular => self.augmented_dim / MODULE_SEGMENT,
        }
    }

    /// Order-independent digest of every frozen angle table, for asserting
    /// that no training path touches them.
    pub fn angle_checksum(&self) -> u64 {
        let mut acc: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |x: f64| {
            acc ^= x.to_bits();
            acc = acc.wrapping_mul(0x1000_0000_01b3);
        };
        for table in &self.layer_angles {
            for rows in [
                &table.alpha,
                &table.beta,
                &table.gamma,
                &table.epsilon,
                &table.zeta,
                &table.eta,
                &table.theta,
            ] {
                for row in rows.iter() {
                    row.iter().copied().for_each(&mut eat);
                }
            }
        }
        if let Some(w0) = &self.input_projection {
            w0.iter().copied().for_each(&mut eat);
        }
        acc
    }
}

/// Per-layer outputs of a forward pass.
///
/// `layers[l]` is the augmented vector `h_{l+1}` fed to the next layer and to
/// the readout; `features[l]` is the measured vector `g_{l+1}` it was built
/// from. Keeping both lets a training loop re-derive `h` under a candidate
/// weight update without touching the simulator again.
#[derive(Debug, Clone, PartialEq)]
pub struct Representation {
    pub features: Vec<Vec<f64>>,
    pub layers: Vec<Vec<f64>>,
}

impl Representation {
    /// All augmented layers joined in order: the readout input of length
    /// `d_h · L`.
    pub fn concatenated(&self) -> Vec<f64> {
        self.layers.iter().flatten().copied().collect()
    }
}

/// Validated shape facts shared by the generator and the checkpoint loader:
/// `(feature_dim, embed_depth, basis_cols)` where `basis_cols` is the column
/// count of each theta row.
pub(crate) fn derive_shape(config: &IqfmConfig) -> Result<(usize, usize, usize)> {
    let n = config.n_qubits;
    if n == 0 || n > MAX_QUBITS {
        return Err(Error::QubitCount(n));
    }
    if config.layers == 0 {
        return Err(Error::Config("layer count must be at least 1".into()));
    }
    if config.extra_bases == 0 {
        return Err(Error::Config(
            "at least one rotated basis is required (the bare Z basis alone \
             leaves the augmented dimension short of the embedding budget)"
                .into(),
        ));
    }
    match config.mode {
        QfmMode::Quantum => {
            let d_g = (config.extra_bases + 1) * n;
            // The next layer's embedding must consume the whole augmented
            // vector: n·d = d_h with d_h = d_g forces d = extra_bases + 1.
            Ok((d_g, config.extra_bases + 1, n))
        }
        QfmMode::ClassicalModular => {
            if n != 4 {
                return Err(Error::Config(format!(
                    "modular mode runs 4-qubit maps, got n_qubits = {n}"
                )));
            }
            if config.width == 0 || config.width % MODULE_SEGMENT != 0 {
                return Err(Error::Config(format!(
                    "modular width must be a positive multiple of {MODULE_SEGMENT}, got {}",
                    config.width
                )));
            }
            let modules = config.width / MODULE_SEGMENT;
            Ok((config.width, MODULE_SEGMENT / 4, 4 * modules))
        }
    }
}

/// Row counts of one layer's angle tables: `(ab_rows, bblock_rows)` for the
/// layer-1-only and every-layer preprocessing stages. Modular layers have no
/// preprocessing at all.
pub(crate) fn table_rows(config: &IqfmConfig, layer: usize) -> (usize, usize) {
    match config.mode {
        QfmMode::Quantum => (
            if layer == 1 { config.depth1 } else { 0 },
            config.depth2,
        ),
        QfmMode::ClassicalModular => (0, 0),
    }
}

/// Draw a fresh model. Angle tables come first (layer by layer, fields in
/// declaration order, rows outer and qubits inner), then the frozen input
/// projection (modular mode), then `W_1..W_L` row-major — a fixed consumption
/// order makes the seed a complete description of the model.
pub fn init_model<R: Rng + ?Sized>(config: &IqfmConfig, rng: &mut R) -> Result<IqfmModel> {
    let n = config.n_qubits;
    let (feature_dim, embed_depth, basis_cols) = derive_shape(config)?;
    let augmented_dim = feature_dim;

    let draw_table = |rng: &mut R, rows: usize, cols: usize| -> Vec<Vec<f64>> {
        (0..rows)
            .map(|_| {
                (0..cols)
                    .map(|_| rng.gen_range(0.0..std::f64::consts::TAU))
                    .collect()
            })
            .collect()
    };
    let mut layer_angles = Vec::with_capacity(config.layers);
    for layer in 1..=config.layers {
        let (ab_rows, b_rows) = table_rows(config, layer);
        layer_angles.push(QfmLayerAngles {
            alpha: draw_table(rng, ab_rows, n),
            beta: draw_table(rng, ab_rows, n),
            gamma: draw_table(rng, b_rows, n),
            epsilon: draw_table(rng, b_rows, n),
            zeta: draw_table(rng, b_rows, n),
            eta: draw_table(rng, b_rows, n),
            theta: draw_table(rng, config.extra_bases, basis_cols),
        });
    }

    let glorot = |rng: &mut R, rows: usize, cols: usize| -> Array2<f64> {
        let bound = (6.0 / (rows + cols) as f64).sqrt();
        Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-bound..bound))
    };
    let input_projection = match config.mode {
        QfmMode::Quantum => None,
        QfmMode::ClassicalModular => Some(glorot(rng, config.width, CLASSICAL_INPUT_DIM)),
    };
    let weights = (0..config.layers)
        .map(|_| glorot(rng, augmented_dim, feature_dim))
        .collect();

    Ok(IqfmModel {
        mode: config.mode,
        n_qubits: n,
        layers: config.layers,
        extra_bases: config.extra_bases,
        depth1: config.depth1,
        depth2: config.depth2,
        embed_depth,
        feature_dim,
        augmented_dim,
        layer_angles,
        weights,
        input_projection,
    })
}

/// Classical augmentation `h = π·tanh(Wg/2)`: squashes the measured features
/// into `(−π, π)` so every component is a valid embedding rotation angle.
/// `tanh` saturates to exactly ±1 in f64 for |Wg/2| ≳ 19 even though the true
/// value never reaches it, so the output is clamped to the widest open
/// interval the type can express.
pub fn augment(weights: &Array2<f64>, features: &[f64]) -> Result<Vec<f64>> {
    if weights.ncols() != features.len() {
        return Err(Error::Dimension {
            context: "augmentation input",
            expected: weights.ncols(),
            actual: features.len(),
        });
    }
    let cap = std::f64::consts::PI.next_down();
    Ok(weights
        .rows()
        .into_iter()
        .map(|row| {
            let z: f64 = row
                .iter()
                .zip(features)
                .map(|(w, g)| w * g)
                .sum();
            (std::f64::consts::PI * (z / 2.0).tanh()).clamp(-cap, cap)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn quantum_dims_follow_basis_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let model = init_model(&IqfmConfig::quantum(8, 5), &mut rng).unwrap();
        assert_eq!(model.feature_dim, 32);
        assert_eq!(model.augmented_dim, 32);
        assert_eq!(model.embed_depth, 4);
        assert_eq!(model.layer_angles.len(), 5);
        assert_eq!(model.weights.len(), 5);
        assert_eq!(model.weights[0].shape(), [32, 32]);
        assert!(model.input_projection.is_none());
        // Layer 1 owns the deep preprocessing stage; later layers do not.
        assert_eq!(model.layer_angles[0].alpha.len(), 2);
        assert!(model.layer_angles[1].alpha.is_empty());
        assert_eq!(model.layer_angles[2].gamma.len(), 2);
    }

    #[test]
    fn classical_dims_scale_with_width() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m16 = init_model(&IqfmConfig::classical(16, 4), &mut rng).unwrap();
        assert_eq!(m16.feature_dim, 16);
        assert_eq!(m16.modules(), 1);
        assert_eq!(
            m16.input_projection.as_ref().unwrap().shape(),
            [16, CLASSICAL_INPUT_DIM]
        );
        let m64 = init_model(&IqfmConfig::classical(64, 2), &mut rng).unwrap();
        assert_eq!(m64.feature_dim, 64);
        assert_eq!(m64.modules(), 4);
        assert_eq!(m64.layer_angles[0].theta[0].len(), 16);
        // No preprocessing tables in modular mode.
        assert!(m64.layer_angles[0].gamma.is_empty());
    }

    #[test]
    fn invalid_shapes_are_config_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!(matches!(
            init_model(&IqfmConfig::classical(20, 2), &mut rng),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            init_model(&IqfmConfig::quantum(8, 0), &mut rng),
            Err(Error::Config(_))
        ));
        let mut cfg = IqfmConfig::classical(16, 2);
        cfg.n_qubits = 5;
        assert!(matches!(init_model(&cfg, &mut rng), Err(Error::Config(_))));
    }

    #[test]
    fn same_seed_reproduces_every_table() {
        let cfg = IqfmConfig::quantum(6, 3);
        let a = init_model(&cfg, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        let b = init_model(&cfg, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        assert_eq!(a.layer_angles, b.layer_angles);
        assert_eq!(a.weights, b.weights);
        assert_eq!(a.angle_checksum(), b.angle_checksum());
        let c = init_model(&cfg, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
        assert_ne!(a.angle_checksum(), c.angle_checksum());
    }

    #[test]
    fn drawn_angles_stay_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let model = init_model(&IqfmConfig::quantum(5, 2), &mut rng).unwrap();
        for t in &model.layer_angles {
            for rows in [&t.alpha, &t.beta, &t.gamma, &t.epsilon, &t.zeta, &t.eta, &t.theta] {
                for v in rows.iter().flatten() {
                    assert!((0.0..std::f64::consts::TAU).contains(v));
                }
            }
        }
    }

    #[test]
    fn glorot_bound_respected() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let model = init_model(&IqfmConfig::quantum(8, 2), &mut rng).unwrap();
        let bound = (6.0 / 64.0f64).sqrt();
        for w in &model.weights {
            assert!(w.iter().all(|v| v.abs() < bound));
        }
    }

    #[test]
    fn augment_matches_formula() {
        let w = Array2::zeros((3, 3));
        assert_eq!(augment(&w, &[1.0, 2.0, 3.0]).unwrap(), vec![0.0; 3]);
        let w = Array2::from_diag_elem(3, 2.0);
        let h = augment(&w, &[1.0, 0.0, 0.0]).unwrap();
        assert!((h[0] - std::f64::consts::PI * 1.0f64.tanh()).abs() < 1e-15);
        assert_eq!(&h[1..], &[0.0, 0.0]);
        assert!(matches!(
            augment(&w, &[1.0, 2.0]),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn augment_output_strictly_inside_pi() {
        let w = Array2::from_elem((4, 4), 1e6);
        let h = augment(&w, &[1.0; 4]).unwrap();
        for v in h {
            assert!(v.abs() < std::f64::consts::PI);
        }
    }
}
