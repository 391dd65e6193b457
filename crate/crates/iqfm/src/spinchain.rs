//! Spin-chain ground-state datasets: cluster-type Hamiltonians, dense exact
//! diagonalization, phase labeling, and binary persistence.
//!
//! Two periodic families are supported, plus an open-boundary variant of the
//! first used by the analytic circuit classifier:
//!
//! * model A: `-Σ Z_{i-1} X_i Z_{i+1} - c1 Σ X_i - c2 Σ X_i X_{i+1}`
//! * model B: `+Σ Z_i - c1 Σ X_i X_{i+1} - c2 Σ X_{i-1} Z_i X_{i+1}`
//!
//! Labels come from an editable [`PhaseBoundaryTable`] of polygonal regions in
//! the `(c1, c2)` plane; an order-parameter oracle cross-checks every emitted
//! sample so a bad table is flagged loudly during generation instead of
//! leaking mislabeled data downstream.

mod dataset;
mod diagnostics;
mod hamiltonian;
mod io;
mod phases;

pub use dataset::{
    generate_open_chain, generate_task_a, generate_task_a_sized, generate_task_b,
    generate_task_b_sized, GeneratedSplit, TASK_A_TEST_H2, TASK_A_TRAIN_H2,
};
pub use diagnostics::{
    cluster_dual_string_order, compute_order_diagnostics, mean_z, OrderDiagnostics,
};
pub use hamiltonian::{build_hamiltonian, ground_state, pauli_terms, DenseHermitian};
pub use io::{load_dataset, save_dataset};
pub(crate) use io::write_bytes_atomic;
pub use phases::{default_task_a_table, default_task_b_table, PhaseBoundaryTable, PhaseRegion};

use crate::error::{Error, Result, MAX_QUBITS};

/// Which Hamiltonian family a spec refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpinModel {
    APeriodic,
    BPeriodic,
    AOpen,
}

impl SpinModel {
    /// Stable one-byte id used in the dataset file format.
    pub fn id(self) -> u8 {
        match self {
            SpinModel::APeriodic => 0,
            SpinModel::BPeriodic => 1,
            SpinModel::AOpen => 2,
        }
    }

    pub fn from_id(id: u8) -> Option<Self> {
        match id {
            0 => Some(SpinModel::APeriodic),
            1 => Some(SpinModel::BPeriodic),
            2 => Some(SpinModel::AOpen),
            _ => None,
        }
    }

    /// Chain length used by the shipped experiments.
    pub fn default_n_qubits(self) -> usize {
        match self {
            SpinModel::APeriodic | SpinModel::BPeriodic => 8,
            SpinModel::AOpen => 9,
        }
    }

    /// Human-readable name of a class id under this model's labeling.
    pub fn phase_name(self, label: u32) -> &'static str {
        match self {
            SpinModel::APeriodic | SpinModel::AOpen => match label {
                1 => "spt",
                _ => "trivial",
            },
            SpinModel::BPeriodic => match label {
                0 => "spt",
                1 => "ferromagnetic",
                2 => "antiferromagnetic",
                _ => "paramagnetic",
            },
        }
    }

    pub fn n_classes(self) -> usize {
        match self {
            SpinModel::APeriodic | SpinModel::AOpen => 2,
            SpinModel::BPeriodic => 4,
        }
    }
}

/// A fully specified Hamiltonian instance: model family, chain length, and
/// the two dimensionless couplings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HamiltonianSpec {
    pub model: SpinModel,
    pub n_qubits: usize,
    pub c1: f64,
    pub c2: f64,
}

impl HamiltonianSpec {
    /// Chains shorter than 3 sites cannot host the three-body terms; longer
    /// than [`MAX_QUBITS`] cannot be diagonalized densely.
    pub fn new(model: SpinModel, n_qubits: usize, c1: f64, c2: f64) -> Result<Self> {
        if !(3..=MAX_QUBITS).contains(&n_qubits) {
            return Err(Error::QubitCount(n_qubits));
        }
        if !c1.is_finite() || !c2.is_finite() {
            return Err(Error::NonFinite("hamiltonian coupling"));
        }
        Ok(Self {
            model,
            n_qubits,
            c1,
            c2,
        })
    }
}

/// One labeled ground state, ready for feature extraction.
#[derive(Debug, Clone)]
pub struct GroundStateSample {
    pub spec: HamiltonianSpec,
    pub energy: f64,
    pub state: crate::statevector::StateVector,
    pub label: u32,
}

impl GroundStateSample {
    pub fn phase_name(&self) -> &'static str {
        self.spec.model.phase_name(self.label)
    }
}

/// A homogeneous collection of ground-state samples (one model, one size).
#[derive(Debug, Clone)]
pub struct SpinDataset {
    pub model: SpinModel,
    pub n_qubits: usize,
    pub samples: Vec<GroundStateSample>,
}

impl SpinDataset {
    pub fn new(model: SpinModel, n_qubits: usize) -> Self {
        Self {
            model,
            n_qubits,
            samples: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Sample count per class id, indexed by label.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.model.n_classes()];
        for s in &self.samples {
            let idx = s.label as usize;
            if idx >= counts.len() {
                counts.resize(idx + 1, 0);
            }
            counts[idx] += 1;
        }
        counts
    }
}

/// Assign the class id and phase name for a parameter point.
///
/// The table must belong to the same model family as the spec; Task A open
/// chains borrow the periodic table, since the labels describe the bulk
/// phase diagram.
pub fn assign_label(
    spec: &HamiltonianSpec,
    table: &PhaseBoundaryTable,
) -> Result<(u32, &'static str)> {
    let compatible = table.model == spec.model
        || (table.model == SpinModel::APeriodic && spec.model == SpinModel::AOpen);
    if !compatible {
        return Err(Error::Config(format!(
            "phase table for {:?} cannot label a {:?} spec",
            table.model, spec.model
        )));
    }
    table.classify(spec.c1, spec.c2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_ids_round_trip() {
        for model in [SpinModel::APeriodic, SpinModel::BPeriodic, SpinModel::AOpen] {
            assert_eq!(SpinModel::from_id(model.id()), Some(model));
        }
        assert_eq!(SpinModel::from_id(3), None);
    }

    #[test]
    fn spec_rejects_bad_sizes() {
        assert!(HamiltonianSpec::new(SpinModel::APeriodic, 2, 0.0, 0.0).is_err());
        assert!(HamiltonianSpec::new(SpinModel::APeriodic, 13, 0.0, 0.0).is_err());
        assert!(HamiltonianSpec::new(SpinModel::APeriodic, 8, f64::NAN, 0.0).is_err());
        assert!(HamiltonianSpec::new(SpinModel::APeriodic, 8, 0.0, 0.0).is_ok());
    }

    #[test]
    fn label_mismatched_table_rejected() {
        let spec = HamiltonianSpec::new(SpinModel::BPeriodic, 8, 0.0, 0.0).unwrap();
        let table = default_task_a_table();
        assert!(assign_label(&spec, &table).is_err());
    }

    #[test]
    fn open_chain_uses_periodic_table() {
        let spec = HamiltonianSpec::new(SpinModel::AOpen, 9, 0.0, 0.0).unwrap();
        let table = default_task_a_table();
        let (label, name) = assign_label(&spec, &table).unwrap();
        assert_eq!(label, 1);
        assert_eq!(name, "spt");
    }
}
