//! Model checkpoint container, magic `IQFM`, all integers and floats
//! little-endian.
//!
//! Layout:
//!
//! ```text
//! offset  size  field
//! 0       4     magic "IQFM"
//! 4       1     version (1)
//! 5       1     mode id (0 = quantum, 1 = modular classical)
//! 6       2     reserved (0)
//! 8       4     n_qubits (u32)
//! 12      4     layers (u32)
//! 16      4     extra_bases (u32)
//! 20      4     depth1 (u32)
//! 24      4     depth2 (u32)
//! 28      4     width (u32, 0 in quantum mode)
//! 32      ...   payload: f64 values in generation order — per layer the
//!               angle tables (alpha, beta, gamma, epsilon, zeta, eta,
//!               theta; rows outer, columns inner), then the frozen input
//!               projection (modular mode only), then W_1..W_L row-major
//! ```
//!
//! The header determines the payload length exactly, so truncation and
//! trailing bytes are both detected. Angles must sit in the drawn range
//! `[0, 2π)` and weights must be finite; every float round-trips
//! bit-exactly. Writes go through a sibling temp file and an atomic rename.

use std::fs;
use std::path::Path;

use ndarray::Array2;

use super::{
    derive_shape, table_rows, IqfmConfig, IqfmModel, QfmLayerAngles, QfmMode, CLASSICAL_INPUT_DIM,
};
use crate::error::{Error, Result};
use crate::spinchain::write_bytes_atomic;

const MAGIC: &[u8; 4] = b"IQFM";
const VERSION: u8 = 1;
const HEADER_LEN: usize = 32;

fn config_of(model: &IqfmModel) -> IqfmConfig {
    IqfmConfig {
        mode: model.mode,
        n_qubits: model.n_qubits,
        layers: model.layers,
        extra_bases: model.extra_bases,
        depth1: model.depth1,
        depth2: model.depth2,
        width: match model.mode {
            QfmMode::Quantum => 0,
            QfmMode::ClassicalModular => model.feature_dim,
        },
    }
}

/// Number of payload floats implied by a header.
fn payload_len(config: &IqfmConfig, feature_dim: usize, basis_cols: usize) -> usize {
    let n = config.n_qubits;
    let mut count = 0;
    for layer in 1..=config.layers {
        let (ab_rows, b_rows) = table_rows(config, layer);
        count += 2 * ab_rows * n + 4 * b_rows * n + config.extra_bases * basis_cols;
    }
    if config.mode == QfmMode::ClassicalModular {
        count += config.width * CLASSICAL_INPUT_DIM;
    }
    count + config.layers * feature_dim * feature_dim
}

pub fn save_model(model: &IqfmModel, path: &Path) -> Result<()> {
    let config = config_of(model);
    let (feature_dim, _, basis_cols) = derive_shape(&config)?;
    let mut bytes =
        Vec::with_capacity(HEADER_LEN + 8 * payload_len(&config, feature_dim, basis_cols));
    bytes.extend_from_slice(MAGIC);
    bytes.push(VERSION);
    bytes.push(model.mode.id());
    bytes.extend_from_slice(&0u16.to_le_bytes());
    for dim in [
        model.n_qubits,
        model.layers,
        model.extra_bases,
        model.depth1,
        model.depth2,
        config.width,
    ] {
        bytes.extend_from_slice(&(dim as u32).to_le_bytes());
    }
    for table in &model.layer_angles {
        for rows in [
            &table.alpha,
            &table.beta,
            &table.gamma,
            &table.epsilon,
            &table.zeta,
            &table.eta,
            &table.theta,
        ] {
            for v in rows.iter().flatten() {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    if let Some(w0) = &model.input_projection {
        for v in w0.iter() {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    for w in &model.weights {
        for v in w.iter() {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    write_bytes_atomic(path, &bytes)
}

pub fn load_model(path: &Path) -> Result<IqfmModel> {
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
        return Err(fail(bytes.len(), "file shorter than the 32-byte header".into()));
    }
    if &bytes[0..4] != MAGIC {
        return Err(fail(0, format!("bad magic {:?}, expected \"IQFM\"", &bytes[0..4])));
    }
    if bytes[4] != VERSION {
        return Err(fail(4, format!("unsupported version {}", bytes[4])));
    }
    let mode = QfmMode::from_id(bytes[5])
        .ok_or_else(|| fail(5, format!("unknown mode id {}", bytes[5])))?;
    let reserved = u16::from_le_bytes([bytes[6], bytes[7]]);
    if reserved != 0 {
        return Err(fail(6, format!("reserved field must be 0, got {reserved}")));
    }
    let dim_at = |off: usize| u32::from_le_bytes(bytes[off..off + 4].try_into().unwrap()) as usize;
    let config = IqfmConfig {
        mode,
        n_qubits: dim_at(8),
        layers: dim_at(12),
        extra_bases: dim_at(16),
        depth1: dim_at(20),
        depth2: dim_at(24),
        width: dim_at(28),
    };
    let (feature_dim, embed_depth, basis_cols) =
        derive_shape(&config).map_err(|e| fail(8, format!("inconsistent header dims: {e}")))?;
    if mode == QfmMode::Quantum && config.width != 0 {
        return Err(fail(28, format!("quantum mode stores width 0, got {}", config.width)));
    }

    let expected = HEADER_LEN + 8 * payload_len(&config, feature_dim, basis_cols);
    if bytes.len() < expected {
        return Err(fail(
            bytes.len(),
            format!("truncated: {} bytes, header promises {expected}", bytes.len()),
        ));
    }
    if bytes.len() > expected {
        return Err(fail(
            expected,
            format!("{} trailing bytes after the last weight", bytes.len() - expected),
        ));
    }

    let mut offset = HEADER_LEN;
    let mut next = |ctx: &str, angle: bool| -> Result<f64> {
        let v = f64::from_le_bytes(bytes[offset..offset + 8].try_into().unwrap());
        if !v.is_finite() {
            return Err(fail(offset, format!("non-finite {ctx} value {v}")));
        }
        if angle && !(0.0..std::f64::consts::TAU).contains(&v) {
            return Err(fail(offset, format!("{ctx} {v} outside the drawn range [0, 2π)")));
        }
        offset += 8;
        Ok(v)
    };
    let mut read_table = |ctx: &str, rows: usize, cols: usize| -> Result<Vec<Vec<f64>>> {
        (0..rows)
            .map(|_| (0..cols).map(|_| next(ctx, true)).collect())
            .collect()
    };

    let mut layer_angles = Vec::with_capacity(config.layers);
    for layer in 1..=config.layers {
        let (ab_rows, b_rows) = table_rows(&config, layer);
        layer_angles.push(QfmLayerAngles {
            alpha: read_table("alpha angle", ab_rows, config.n_qubits)?,
            beta: read_table("beta angle", ab_rows, config.n_qubits)?,
            gamma: read_table("gamma angle", b_rows, config.n_qubits)?,
            epsilon: read_table("epsilon angle", b_rows, config.n_qubits)?,
            zeta: read_table("zeta angle", b_rows, config.n_qubits)?,
            eta: read_table("eta angle", b_rows, config.n_qubits)?,
            theta: read_table("theta angle", config.extra_bases, basis_cols)?,
        });
    }
    let input_projection = match mode {
        QfmMode::Quantum => None,
        QfmMode::ClassicalModular => {
            let mut w0 = Array2::zeros((config.width, CLASSICAL_INPUT_DIM));
            for v in w0.iter_mut() {
                *v = next("projection weight", false)?;
            }
            Some(w0)
        }
    };
    let mut weights = Vec::with_capacity(config.layers);
    for _ in 0..config.layers {
        let mut w = Array2::zeros((feature_dim, feature_dim));
        for v in w.iter_mut() {
            *v = next("layer weight", false)?;
        }
        weights.push(w);
    }

    Ok(IqfmModel {
        mode,
        n_qubits: config.n_qubits,
        layers: config.layers,
        extra_bases: config.extra_bases,
        depth1: config.depth1,
        depth2: config.depth2,
        embed_depth,
        feature_dim,
        augmented_dim: feature_dim,
        layer_angles,
        weights,
        input_projection,
    })
}
