//! Hamiltonian assembly and dense ground-state solves.
//!
//! Every term in both model families uses only X and Z letters, so the
//! matrices are real symmetric in the computational basis. The public type
//! stores complex entries (callers may build arbitrary Hermitian matrices),
//! but `ground_state` detects the real case and routes it to the cheaper
//! real-symmetric solver.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use super::{HamiltonianSpec, SpinModel};
use crate::error::{Error, Result};
use crate::linalg;
use crate::statevector::{PauliLetter, PauliString, StateVector};

/// Residual bound every emitted ground state must satisfy: ‖Hv − E₀v‖₂.
pub const GROUND_STATE_RESIDUAL_BOUND: f64 = 1e-8;

/// Dense Hermitian operator on `n` qubits.
#[derive(Debug, Clone)]
pub struct DenseHermitian {
    entries: Array2<Complex64>,
}

impl DenseHermitian {
    /// Wrap a matrix, rejecting non-square shapes, non-power-of-two
    /// dimensions, and Hermiticity violations above 1e-12.
    pub fn new(entries: Array2<Complex64>) -> Result<Self> {
        let (rows, cols) = entries.dim();
        if rows != cols {
            return Err(Error::Dimension {
                context: "hermitian matrix",
                expected: rows,
                actual: cols,
            });
        }
        if !rows.is_power_of_two() {
            return Err(Error::Numeric(format!(
                "hermitian dimension {rows} is not a power of two"
            )));
        }
        let mut max_violation = 0.0f64;
        for i in 0..rows {
            for j in i..cols {
                let v = (entries[(i, j)] - entries[(j, i)].conj()).norm();
                max_violation = max_violation.max(v);
            }
        }
        if max_violation > 1e-12 {
            return Err(Error::Numeric(format!(
                "matrix is not Hermitian: max |H - H†| entry {max_violation:.3e}"
            )));
        }
        Ok(Self { entries })
    }

    /// Sum of weighted Pauli strings, built column-by-column from the masks.
    pub fn from_pauli_terms(n_qubits: usize, terms: &[(f64, PauliString)]) -> Result<Self> {
        let dim = 1usize << n_qubits;
        let mut entries = Array2::<Complex64>::zeros((dim, dim));
        for (coeff, pauli) in terms {
            if pauli.n_qubits() != n_qubits {
                return Err(Error::Dimension {
                    context: "pauli term width",
                    expected: n_qubits,
                    actual: pauli.n_qubits(),
                });
            }
            let (x_mask, z_mask) = pauli.masks();
            for col in 0..dim as u64 {
                // (X Z)|col⟩ = (−1)^{|col ∧ z|} |col ⊕ x⟩; X and Z masks are
                // site-disjoint for every term built here, so the order of
                // the two factors does not matter.
                let sign = if (col & z_mask).count_ones() % 2 == 0 {
                    1.0
                } else {
                    -1.0
                };
                entries[((col ^ x_mask) as usize, col as usize)] += coeff * sign;
            }
        }
        Self::new(entries)
    }

    pub fn dim(&self) -> usize {
        self.entries.dim().0
    }

    pub fn n_qubits(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    pub fn entries(&self) -> &Array2<Complex64> {
        &self.entries
    }

    /// Largest entrywise |H − H†|; zero for anything accepted by `new`, kept
    /// public so generated datasets can re-assert the invariant.
    pub fn hermiticity_residual(&self) -> f64 {
        let n = self.dim();
        let mut max = 0.0f64;
        for i in 0..n {
            for j in i..n {
                max = max.max((self.entries[(i, j)] - self.entries[(j, i)].conj()).norm());
            }
        }
        max
    }

    fn max_imag(&self) -> f64 {
        self.entries.iter().map(|e| e.im.abs()).fold(0.0, f64::max)
    }
}

/// The weighted Pauli terms of a spec, in site order.
pub fn pauli_terms(spec: &HamiltonianSpec) -> Result<Vec<(f64, PauliString)>> {
    let n = spec.n_qubits;
    let mut terms = Vec::new();
    let zxz = |a: usize, b: usize, c: usize| -> Result<PauliString> {
        PauliString::from_ops(
            n,
            &[
                (a, PauliLetter::Z),
                (b, PauliLetter::X),
                (c, PauliLetter::Z),
            ],
        )
    };
    let xzx = |a: usize, b: usize, c: usize| -> Result<PauliString> {
        PauliString::from_ops(
            n,
            &[
                (a, PauliLetter::X),
                (b, PauliLetter::Z),
                (c, PauliLetter::X),
            ],
        )
    };
    let xx = |a: usize, b: usize| -> Result<PauliString> {
        PauliString::from_ops(n, &[(a, PauliLetter::X), (b, PauliLetter::X)])
    };
    match spec.model {
        SpinModel::APeriodic => {
            for i in 0..n {
                terms.push((-1.0, zxz((i + n - 1) % n, i, (i + 1) % n)?));
            }
            for i in 0..n {
                terms.push((-spec.c1, PauliString::x(n, i)?));
            }
            for i in 0..n {
                terms.push((-spec.c2, xx(i, (i + 1) % n)?));
            }
        }
        SpinModel::AOpen => {
            for i in 1..n - 1 {
                terms.push((-1.0, zxz(i - 1, i, i + 1)?));
            }
            for i in 0..n {
                terms.push((-spec.c1, PauliString::x(n, i)?));
            }
            for i in 0..n - 1 {
                terms.push((-spec.c2, xx(i, i + 1)?));
            }
        }
        SpinModel::BPeriodic => {
            for i in 0..n {
                terms.push((1.0, PauliString::z(n, i)?));
            }
            for i in 0..n {
                terms.push((-spec.c1, xx(i, (i + 1) % n)?));
            }
            for i in 0..n {
                terms.push((-spec.c2, xzx((i + n - 1) % n, i, (i + 1) % n)?));
            }
        }
    }
    Ok(terms)
}

pub fn build_hamiltonian(spec: &HamiltonianSpec) -> Result<DenseHermitian> {
    DenseHermitian::from_pauli_terms(spec.n_qubits, &pauli_terms(spec)?)
}

/// Lowest eigenpair with a verified residual and a deterministic global
/// phase: the largest-magnitude amplitude (lowest index on ties) is rotated
/// to the positive real axis.
pub fn ground_state(h: &DenseHermitian) -> Result<(f64, StateVector)> {
    let dim = h.dim();
    let mut amps: Vec<Complex64>;
    let energy: f64;
    if h.max_imag() <= 1e-12 {
        let real = h.entries.mapv(|e| e.re);
        let (e0, v) = linalg::lowest_eigenpair_symmetric(&real)?;
        energy = e0;
        amps = v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    } else {
        let (values, vectors) = linalg::eigh_hermitian(&h.entries)?;
        energy = values[0];
        amps = vectors.column(0).to_vec();
    }

    // Normalize, then fix the global phase.
    let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if norm <= 0.0 {
        return Err(Error::Numeric("eigensolver returned a zero vector".into()));
    }
    for a in &mut amps {
        *a /= norm;
    }
    let mut pivot = 0usize;
    for (i, a) in amps.iter().enumerate() {
        if a.norm_sqr() > amps[pivot].norm_sqr() + 0.0 {
            pivot = i;
        }
    }
    let phase = amps[pivot] / amps[pivot].norm();
    for a in &mut amps {
        *a /= phase;
    }

    let residual = {
        let v = Array1::from_vec(amps.clone());
        let hv = h.entries.dot(&v);
        let mut acc = 0.0f64;
        for i in 0..dim {
            acc += (hv[i] - energy * v[i]).norm_sqr();
        }
        acc.sqrt()
    };
    if residual > GROUND_STATE_RESIDUAL_BOUND {
        return Err(Error::ResidualBound {
            residual,
            bound: GROUND_STATE_RESIDUAL_BOUND,
        });
    }
    let state = StateVector::from_amplitudes(h.n_qubits(), amps)?;
    Ok((energy, state))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spinchain::HamiltonianSpec;
    use ndarray::arr2;

    fn spec(model: SpinModel, n: usize, c1: f64, c2: f64) -> HamiltonianSpec {
        HamiltonianSpec::new(model, n, c1, c2).unwrap()
    }

    #[test]
    fn term_counts_per_model() {
        let a = pauli_terms(&spec(SpinModel::APeriodic, 8, 0.5, 0.5)).unwrap();
        assert_eq!(a.len(), 24);
        let b = pauli_terms(&spec(SpinModel::BPeriodic, 8, 0.5, 0.5)).unwrap();
        assert_eq!(b.len(), 24);
        // Open boundaries truncate the sums: n−2 three-body and n−1 two-body.
        let open = pauli_terms(&spec(SpinModel::AOpen, 9, 0.5, 0.5)).unwrap();
        assert_eq!(open.len(), 7 + 9 + 8);
    }

    #[test]
    fn hamiltonians_are_exactly_hermitian() {
        for s in [
            spec(SpinModel::APeriodic, 6, 0.7, -0.3),
            spec(SpinModel::BPeriodic, 6, 2.0, -1.5),
            spec(SpinModel::AOpen, 5, 1.1, 0.4),
        ] {
            let h = build_hamiltonian(&s).unwrap();
            assert!(h.hermiticity_residual() <= 1e-12);
        }
    }

    #[test]
    fn cluster_point_ground_energy_is_minus_n() {
        // All n three-body stabilizers commute and can be simultaneously +1.
        let h = build_hamiltonian(&spec(SpinModel::APeriodic, 8, 0.0, 0.0)).unwrap();
        let (e0, state) = ground_state(&h).unwrap();
        assert!((e0 - (-8.0)).abs() < 1e-9, "E0 = {e0}");
        assert!((state.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn field_only_model_b_is_all_ones() {
        let h = build_hamiltonian(&spec(SpinModel::BPeriodic, 8, 0.0, 0.0)).unwrap();
        let (e0, state) = ground_state(&h).unwrap();
        assert!((e0 - (-8.0)).abs() < 1e-10);
        let amps = state.amplitudes();
        assert!((amps[255].re - 1.0).abs() < 1e-10);
        let off: f64 = amps[..255].iter().map(|a| a.norm()).sum();
        assert!(off < 1e-8);
    }

    #[test]
    fn hand_built_diagonal_matrix() {
        let m = arr2(&[
            [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
            [Complex64::new(0.0, 0.0), Complex64::new(-1.0, 0.0)],
        ]);
        let h = DenseHermitian::new(m).unwrap();
        let (e0, state) = ground_state(&h).unwrap();
        assert!((e0 + 1.0).abs() < 1e-12);
        assert!((state.amplitudes()[1].re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn non_hermitian_rejected() {
        let m = arr2(&[
            [Complex64::new(1.0, 0.0), Complex64::new(0.5, 0.0)],
            [Complex64::new(0.2, 0.0), Complex64::new(-1.0, 0.0)],
        ]);
        assert!(DenseHermitian::new(m).is_err());
    }

    #[test]
    fn residual_bound_holds_off_special_points() {
        let h = build_hamiltonian(&spec(SpinModel::APeriodic, 8, 0.5, 0.0)).unwrap();
        let (_, _) = ground_state(&h).unwrap(); // would fail on residual > 1e-8
    }

    #[test]
    fn complex_hermitian_path_agrees_with_real_path() {
        // Add a tiny imaginary Hermitian perturbation to force the complex
        // solver, then compare against the unperturbed real solve.
        let h_real = build_hamiltonian(&spec(SpinModel::APeriodic, 4, 0.5, 0.2)).unwrap();
        let mut entries = h_real.entries().clone();
        entries[(1, 2)] += Complex64::new(0.0, 1e-3);
        entries[(2, 1)] -= Complex64::new(0.0, 1e-3);
        let h_complex = DenseHermitian::new(entries).unwrap();
        let (e_real, _) = ground_state(&h_real).unwrap();
        let (e_complex, _) = ground_state(&h_complex).unwrap();
        assert!(
            (e_real - e_complex).abs() < 1e-3,
            "perturbed energy moved too far: {e_real} vs {e_complex}"
        );
    }

    #[test]
    fn deterministic_across_repeated_solves() {
        let h = build_hamiltonian(&spec(SpinModel::BPeriodic, 8, 3.0, 0.0)).unwrap();
        let (e1, s1) = ground_state(&h).unwrap();
        let (e2, s2) = ground_state(&h).unwrap();
        assert_eq!(e1.to_bits(), e2.to_bits());
        for (a, b) in s1.amplitudes().iter().zip(s2.amplitudes()) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
    }

    #[test]
    fn phase_fix_makes_largest_amplitude_real_positive() {
        let h = build_hamiltonian(&spec(SpinModel::APeriodic, 6, 0.9, -0.4)).unwrap();
        let (_, state) = ground_state(&h).unwrap();
        let amps = state.amplitudes();
        let pivot = amps
            .iter()
            .enumerate()
            .max_by(|(_, a), (_, b)| a.norm_sqr().partial_cmp(&b.norm_sqr()).unwrap())
            .map(|(i, _)| i)
            .unwrap();
        assert!(amps[pivot].re > 0.0);
        assert!(amps[pivot].im.abs() < 1e-12);
    }
}
