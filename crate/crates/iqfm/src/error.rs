//! Crate-wide error type.
//!
//! Everything fallible returns [`Result`]. Variants are grouped roughly by
//! subsystem; the simulator and dataset builders reject bad input eagerly so
//! downstream training code can assume well-formed shapes.

use thiserror::Error;

/// Maximum qubit count supported by the dense simulator.
///
/// Amplitude vectors are `2^n` complex doubles; 12 qubits (64 KiB) keeps every
/// forward pass comfortably in cache and is all the experiments need (8-qubit
/// chains, 9-qubit open chains, plus up to 4 label qubits on joint states).
pub const MAX_QUBITS: usize = 12;

#[derive(Debug, Error)]
pub enum Error {
    // --- simulator ---
    #[error("qubit count {0} outside supported range 1..={MAX_QUBITS}")]
    QubitCount(usize),
    #[error("qubit index {index} out of range for {n_qubits}-qubit state")]
    QubitIndex { index: usize, n_qubits: usize },
    #[error("gate targets must be distinct, got {0:?}")]
    DuplicateTarget(Vec<usize>),
    #[error("state norm {0} is not 1 within tolerance")]
    NotNormalized(f64),
    #[error("shot count must be positive")]
    ZeroShots,
    #[error("noise strength {0} must be finite and non-negative")]
    NoiseStrength(f64),

    // --- shapes and numerics ---
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    Dimension {
        context: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("eigensolver did not converge for eigenvalue index {0}")]
    EigenNoConvergence(usize),
    #[error("ground-state residual {residual:.3e} exceeds bound {bound:.3e}")]
    ResidualBound { residual: f64, bound: f64 },

    // --- dataset generation and labeling ---
    #[error("couplings ({c1}, {c2}) lie on a configured phase boundary")]
    OnPhaseBoundary { c1: f64, c2: f64 },
    #[error("couplings ({c1}, {c2}) matched {hits} regions instead of exactly one")]
    RegionCoverage { c1: f64, c2: f64, hits: usize },
    #[error(
        "class balance unreachable: {drawn} draws yielded {found}/{needed} samples of class {class}"
    )]
    BalanceCap {
        class: u32,
        found: usize,
        needed: usize,
        drawn: usize,
    },
    #[error("no positive partner available for anchor of class {0}")]
    Pairing(u32),

    // --- learning ---
    #[error("cosine similarity undefined for a zero-norm vector")]
    ZeroNormVector,
    #[error("optimizer failure: {0}")]
    Optimizer(String),

    // --- file formats ---
    #[error("format error in {path} at byte {offset}: {detail}")]
    Format {
        path: String,
        offset: u64,
        detail: String,
    },

    // --- configuration / orchestration ---
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Attach a path to a raw I/O error.
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Shorthand for a format error at a known byte offset.
    pub fn format(path: impl Into<String>, offset: u64, detail: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            offset,
            detail: detail.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
