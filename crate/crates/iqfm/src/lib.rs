//! Iterative quantum feature maps (IQFMs) on a dense statevector simulator.
//!
//! The crate trains deep feature-map stacks whose circuit parameters stay
//! frozen at random values while small classical weight matrices between the
//! layers are learned with a layer-wise contrastive objective. It ships the
//! full experiment stack:
//!
//! * [`statevector`] — dense simulator (≤ 12 qubits) with the fixed gate set.
//! * [`linalg`] — in-repo symmetric/Hermitian eigensolver.
//! * [`spinchain`] — spin-chain Hamiltonians, ground-state datasets, phase
//!   labels and order-parameter diagnostics.
//! * [`qfm`] — feature-map circuits, multi-basis feature extraction, and the
//!   quantum/classical forward passes.
//! * [`learn`] — contrastive loss and gradients, layer-wise training, the
//!   label-register one-step variant, and the dense readout network.
//! * [`baselines`] — variational QCNN, a translation-invariant exact QCNN,
//!   classical-shadow kernels with an SMO-based SVM, and a width-matched
//!   classical network.
//! * [`exp`] — experiment configs, runners, seeds, reports, and file formats.
//!
//! Start with the runnable programs under `examples/` — there is one per major
//! capability — or the `iqfm` binary for the config-driven pipelines.

pub mod baselines;
pub mod error;
pub mod exp;
pub mod learn;
pub mod linalg;
pub mod qfm;
pub mod spinchain;
pub mod statevector;

pub use error::{Error, Result};
