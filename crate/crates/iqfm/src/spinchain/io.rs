//! Binary dataset container, magic `IQGS`, all integers and floats
//! little-endian.
//!
//! Layout:
//!
//! ```text
//! offset  size  field
//! 0       4     magic "IQGS"
//! 4       1     version (1)
//! 5       1     model id (0 = A periodic, 1 = B periodic, 2 = A open)
//! 6       2     reserved (0)
//! 8       4     n_qubits (u32)
//! 12      4     n_samples (u32)
//! 16      ...   samples, each: label u32, c1 f64, c2 f64, energy f64,
//!               then 2^n amplitude pairs (re f64, im f64)
//! ```
//!
//! Floats round-trip bit-exactly. Writes go through a sibling temp file and
//! an atomic rename, so a killed process leaves either the old file or the
//! complete new one.

use std::fs;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;

use super::{GroundStateSample, HamiltonianSpec, SpinDataset, SpinModel};
use crate::error::{Error, Result};
use crate::statevector::StateVector;

const MAGIC: &[u8; 4] = b"IQGS";
const VERSION: u8 = 1;
const HEADER_LEN: usize = 16;

pub fn save_dataset(dataset: &SpinDataset, path: &Path) -> Result<()> {
    let dim = 1usize << dataset.n_qubits;
    for (i, s) in dataset.samples.iter().enumerate() {
        if s.spec.model != dataset.model || s.spec.n_qubits != dataset.n_qubits {
            return Err(Error::Config(format!(
                "sample {i} does not match the dataset header \
                 ({:?}/{} vs {:?}/{})",
                s.spec.model, s.spec.n_qubits, dataset.model, dataset.n_qubits
            )));
        }
        if s.state.dim() != dim {
            return Err(Error::Dimension {
                context: "sample state dimension",
                expected: dim,
                actual: s.state.dim(),
            });
        }
    }

    let mut bytes = Vec::with_capacity(HEADER_LEN + dataset.len() * (28 + 16 * dim));
    bytes.extend_from_slice(MAGIC);
    bytes.push(VERSION);
    bytes.push(dataset.model.id());
    bytes.extend_from_slice(&0u16.to_le_bytes());
    bytes.extend_from_slice(&(dataset.n_qubits as u32).to_le_bytes());
    bytes.extend_from_slice(&(dataset.len() as u32).to_le_bytes());
    for s in &dataset.samples {
        bytes.extend_from_slice(&s.label.to_le_bytes());
        bytes.extend_from_slice(&s.spec.c1.to_le_bytes());
        bytes.extend_from_slice(&s.spec.c2.to_le_bytes());
        bytes.extend_from_slice(&s.energy.to_le_bytes());
        for amp in s.state.amplitudes() {
            bytes.extend_from_slice(&amp.re.to_le_bytes());
            bytes.extend_from_slice(&amp.im.to_le_bytes());
        }
    }

    write_bytes_atomic(path, &bytes)
}

/// Writes `bytes` to `path` via a same-directory temp file and rename.
pub(crate) fn write_bytes_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let tmp_name = format!(
        "{}.tmp.{}",
        path.file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dataset".into()),
        std::process::id()
    );
    let tmp_path = match dir {
        Some(d) => d.join(&tmp_name),
        None => std::path::PathBuf::from(&tmp_name),
    };
    let io_err = |e: std::io::Error, p: &Path| Error::Io {
        path: p.display().to_string(),
        source: e,
    };
    let mut file = fs::File::create(&tmp_path).map_err(|e| io_err(e, &tmp_path))?;
    file.write_all(bytes).map_err(|e| io_err(e, &tmp_path))?;
    file.sync_all().map_err(|e| io_err(e, &tmp_path))?;
    drop(file);
    fs::rename(&tmp_path, path).map_err(|e| io_err(e, path))
}

pub fn load_dataset(path: &Path) -> Result<SpinDataset> {
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
        return Err(fail(bytes.len(), "file shorter than the 16-byte header".into()));
    }
    if &bytes[0..4] != MAGIC {
        return Err(fail(0, format!("bad magic {:?}, expected \"IQGS\"", &bytes[0..4])));
    }
    if bytes[4] != VERSION {
        return Err(fail(4, format!("unsupported version {}", bytes[4])));
    }
    let model = SpinModel::from_id(bytes[5])
        .ok_or_else(|| fail(5, format!("unknown model id {}", bytes[5])))?;
    let reserved = u16::from_le_bytes([bytes[6], bytes[7]]);
    if reserved != 0 {
        return Err(fail(6, format!("reserved field must be 0, got {reserved}")));
    }
    let n_qubits = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    if !(3..=crate::error::MAX_QUBITS).contains(&n_qubits) {
        return Err(fail(8, format!("qubit count {n_qubits} outside supported range")));
    }
    let n_samples = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;

    let dim = 1usize << n_qubits;
    let sample_len = 28 + 16 * dim;
    let expected = HEADER_LEN + n_samples * sample_len;
    if bytes.len() < expected {
        return Err(fail(
            bytes.len(),
            format!("truncated: {} bytes, header promises {expected}", bytes.len()),
        ));
    }
    if bytes.len() > expected {
        return Err(fail(
            expected,
            format!("{} trailing bytes after the last sample", bytes.len() - expected),
        ));
    }

    let f64_at = |off: usize| f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());
    let mut samples = Vec::with_capacity(n_samples);
    for s in 0..n_samples {
        let base = HEADER_LEN + s * sample_len;
        let label = u32::from_le_bytes(bytes[base..base + 4].try_into().unwrap());
        if label as usize >= model.n_classes() {
            return Err(fail(
                base,
                format!("label {label} out of range for {} classes", model.n_classes()),
            ));
        }
        let c1 = f64_at(base + 4);
        let c2 = f64_at(base + 12);
        let energy = f64_at(base + 20);
        let spec = HamiltonianSpec::new(model, n_qubits, c1, c2)
            .map_err(|e| fail(base + 4, format!("invalid couplings: {e}")))?;
        let mut amps = Vec::with_capacity(dim);
        for k in 0..dim {
            let off = base + 28 + 16 * k;
            amps.push(Complex64::new(f64_at(off), f64_at(off + 8)));
        }
        let state = StateVector::from_amplitudes(n_qubits, amps)
            .map_err(|e| fail(base + 28, format!("invalid state: {e}")))?;
        samples.push(GroundStateSample {
            spec,
            energy,
            state,
            label,
        });
    }
    Ok(SpinDataset {
        model,
        n_qubits,
        samples,
    })
}
