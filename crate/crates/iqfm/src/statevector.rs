//! Dense statevector simulator for up to [`MAX_QUBITS`] qubits.
//!
//! Conventions, fixed repo-wide:
//!
//! * Qubit 0 is the **most significant** bit of the computational basis index,
//!   so for `n = 3` the basis state |q0 q1 q2⟩ = |110⟩ has index `0b110 = 6`.
//! * Rotation gates use the physics sign convention
//!   `RX(θ) = exp(-i θ X / 2)`, `RZ(θ) = exp(-i θ Z / 2)`,
//!   `RZZ(θ) = exp(-i θ Z⊗Z / 2)`.
//!
//! States are plain heap vectors of `Complex64`; every public operation takes
//! `&self` and returns a fresh state, so values are immutable once an
//! operation has returned. Hot loops inside the crate use the `pub(crate)`
//! in-place variants to avoid churning allocations.

use num_complex::Complex64;
use rand::Rng;
use std::collections::BTreeMap;

use crate::error::{Error, Result, MAX_QUBITS};

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// One gate from the fixed set the experiments use.
///
/// Angles are in radians. Multi-qubit variants demand distinct targets.
#[derive(Debug, Clone, PartialEq)]
pub enum Gate {
    H(usize),
    X(usize),
    Rx(usize, f64),
    Rz(usize, f64),
    Rzz(usize, usize, f64),
    Cz(usize, usize),
    Cnot { control: usize, target: usize },
    /// Toffoli; native so the translation-invariant pooling circuits stay
    /// three gates per block instead of a dozen.
    Ccx { controls: (usize, usize), target: usize },
    Swap(usize, usize),
}

impl Gate {
    /// All qubit indices the gate touches, in declaration order.
    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::H(q) | Gate::X(q) | Gate::Rx(q, _) | Gate::Rz(q, _) => vec![q],
            Gate::Rzz(a, b, _) | Gate::Cz(a, b) | Gate::Swap(a, b) => vec![a, b],
            Gate::Cnot { control, target } => vec![control, target],
            Gate::Ccx {
                controls: (a, b),
                target,
            } => vec![a, b, target],
        }
    }

    fn validate(&self, n_qubits: usize) -> Result<()> {
        let qs = self.qubits();
        for &q in &qs {
            if q >= n_qubits {
                return Err(Error::QubitIndex {
                    index: q,
                    n_qubits,
                });
            }
        }
        for i in 0..qs.len() {
            for j in i + 1..qs.len() {
                if qs[i] == qs[j] {
                    return Err(Error::DuplicateTarget(qs));
                }
            }
        }
        Ok(())
    }
}

/// An ordered gate list over a fixed qubit count.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Circuit {
    n_qubits: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Circuit {
            n_qubits,
            gates: Vec::new(),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn push(&mut self, gate: Gate) -> &mut Self {
        self.gates.push(gate);
        self
    }

    pub fn extend(&mut self, gates: impl IntoIterator<Item = Gate>) -> &mut Self {
        self.gates.extend(gates);
        self
    }
}

/// Single Pauli letter; `Y` never shows up in the observables the experiments
/// measure (Y-basis sampling is done by rotating with gates instead).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PauliLetter {
    I,
    X,
    Z,
}

/// Tensor product of I/X/Z letters over `n` qubits, stored as bit masks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PauliString {
    n_qubits: usize,
    x_mask: u64,
    z_mask: u64,
}

impl PauliString {
    /// The identity string on `n_qubits`.
    pub fn identity(n_qubits: usize) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::QubitCount(n_qubits));
        }
        Ok(PauliString {
            n_qubits,
            x_mask: 0,
            z_mask: 0,
        })
    }

    /// Build from a sparse `(qubit, letter)` list; later entries overwrite
    /// earlier ones on the same qubit.
    pub fn from_ops(n_qubits: usize, ops: &[(usize, PauliLetter)]) -> Result<Self> {
        let mut p = PauliString::identity(n_qubits)?;
        for &(q, letter) in ops {
            p.set(q, letter)?;
        }
        Ok(p)
    }

    pub fn set(&mut self, qubit: usize, letter: PauliLetter) -> Result<()> {
        if qubit >= self.n_qubits {
            return Err(Error::QubitIndex {
                index: qubit,
                n_qubits: self.n_qubits,
            });
        }
        let m = bit_mask(self.n_qubits, qubit);
        self.x_mask &= !m;
        self.z_mask &= !m;
        match letter {
            PauliLetter::I => {}
            PauliLetter::X => self.x_mask |= m,
            PauliLetter::Z => self.z_mask |= m,
        }
        Ok(())
    }

    /// Single-qubit `Z_q`.
    pub fn z(n_qubits: usize, qubit: usize) -> Result<Self> {
        Self::from_ops(n_qubits, &[(qubit, PauliLetter::Z)])
    }

    /// Single-qubit `X_q`.
    pub fn x(n_qubits: usize, qubit: usize) -> Result<Self> {
        Self::from_ops(n_qubits, &[(qubit, PauliLetter::X)])
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// The `(x_mask, z_mask)` bit-mask pair, qubit 0 at the most significant
    /// position — what matrix builders need to place entries directly.
    pub fn masks(&self) -> (u64, u64) {
        (self.x_mask, self.z_mask)
    }
}

/// Histogram of sampled basis states.
///
/// Keys are basis indices under the qubit-0-is-MSB convention; a `BTreeMap`
/// keeps iteration order deterministic for serialization and tests.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShotCounts {
    pub n_qubits: usize,
    pub shots: u64,
    pub counts: BTreeMap<u64, u64>,
}

impl ShotCounts {
    /// Render a basis index as a bitstring, qubit 0 first.
    pub fn bitstring(&self, index: u64) -> String {
        (0..self.n_qubits)
            .map(|q| {
                if index & bit_mask(self.n_qubits, q) != 0 {
                    '1'
                } else {
                    '0'
                }
            })
            .collect()
    }

    /// Finite-shot estimates of ⟨Z_i⟩ for every qubit: each sampled bitstring
    /// contributes +1 where the bit is 0 and −1 where it is 1, weighted by its
    /// empirical frequency.
    pub fn z_estimates(&self) -> Vec<f64> {
        let mut acc = vec![0.0; self.n_qubits];
        let total = self.shots as f64;
        for (&index, &count) in &self.counts {
            let w = count as f64 / total;
            for (q, a) in acc.iter_mut().enumerate() {
                if index & bit_mask(self.n_qubits, q) != 0 {
                    *a -= w;
                } else {
                    *a += w;
                }
            }
        }
        acc
    }
}

#[inline(always)]
fn bit_mask(n_qubits: usize, qubit: usize) -> u64 {
    1u64 << (n_qubits - 1 - qubit)
}

/// Dense pure state on `n_qubits`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// |0…0⟩ on `n_qubits`.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        Self::basis_index(n_qubits, 0)
    }

    /// Computational basis state from explicit bits, qubit 0 first.
    pub fn basis(n_qubits: usize, bits: &[u8]) -> Result<Self> {
        if bits.len() != n_qubits {
            return Err(Error::Dimension {
                context: "basis state bits",
                expected: n_qubits,
                actual: bits.len(),
            });
        }
        let mut index = 0u64;
        for (q, &b) in bits.iter().enumerate() {
            if b > 1 {
                return Err(Error::Numeric(format!("basis bit must be 0 or 1, got {b}")));
            }
            if b == 1 {
                index |= bit_mask(n_qubits, q);
            }
        }
        Self::basis_index(n_qubits, index)
    }

    /// Basis state from an index under the qubit-0-is-MSB convention.
    pub fn basis_index(n_qubits: usize, index: u64) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::QubitCount(n_qubits));
        }
        let dim = 1usize << n_qubits;
        if index as usize >= dim {
            return Err(Error::Numeric(format!(
                "basis index {index} out of range for {n_qubits} qubits"
            )));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        amps[index as usize] = Complex64::new(1.0, 0.0);
        Ok(StateVector { n_qubits, amps })
    }

    /// Wrap raw amplitudes; rejects wrong lengths, non-finite entries, and
    /// vectors whose norm strays from 1 by more than 1e-6.
    pub fn from_amplitudes(n_qubits: usize, amps: Vec<Complex64>) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::QubitCount(n_qubits));
        }
        let dim = 1usize << n_qubits;
        if amps.len() != dim {
            return Err(Error::Dimension {
                context: "amplitude vector",
                expected: dim,
                actual: amps.len(),
            });
        }
        let mut norm_sq = 0.0;
        for a in &amps {
            if !a.re.is_finite() || !a.im.is_finite() {
                return Err(Error::NonFinite("state amplitudes"));
            }
            norm_sq += a.norm_sqr();
        }
        let norm = norm_sq.sqrt();
        if (norm - 1.0).abs() > 1e-6 {
            return Err(Error::NotNormalized(norm));
        }
        Ok(StateVector { n_qubits, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// ⟨self|rhs⟩.
    pub fn inner(&self, rhs: &StateVector) -> Result<Complex64> {
        if rhs.n_qubits != self.n_qubits {
            return Err(Error::Dimension {
                context: "inner product",
                expected: self.n_qubits,
                actual: rhs.n_qubits,
            });
        }
        Ok(self
            .amps
            .iter()
            .zip(&rhs.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// |⟨self|rhs⟩|², insensitive to global phase.
    pub fn fidelity(&self, rhs: &StateVector) -> Result<f64> {
        Ok(self.inner(rhs)?.norm_sqr())
    }

    /// Tensor product `self ⊗ rhs`; `self`'s qubits come first (most
    /// significant), matching the qubit-0-is-MSB index convention.
    pub fn tensor(&self, rhs: &StateVector) -> Result<StateVector> {
        let n = self.n_qubits + rhs.n_qubits;
        if n > MAX_QUBITS {
            return Err(Error::QubitCount(n));
        }
        let mut amps = Vec::with_capacity(self.amps.len() * rhs.amps.len());
        for a in &self.amps {
            for b in &rhs.amps {
                amps.push(a * b);
            }
        }
        Ok(StateVector { n_qubits: n, amps })
    }

    /// Apply one gate, returning the new state.
    pub fn apply_gate(&self, gate: &Gate) -> Result<StateVector> {
        let mut out = self.clone();
        out.apply_gate_mut(gate)?;
        Ok(out)
    }

    /// Run a whole circuit (one allocation up front).
    pub fn run_circuit(&self, circuit: &Circuit) -> Result<StateVector> {
        if circuit.n_qubits() != self.n_qubits {
            return Err(Error::Dimension {
                context: "circuit width",
                expected: self.n_qubits,
                actual: circuit.n_qubits(),
            });
        }
        let mut out = self.clone();
        for gate in circuit.gates() {
            out.apply_gate_mut(gate)?;
        }
        Ok(out)
    }

    pub(crate) fn apply_gate_mut(&mut self, gate: &Gate) -> Result<()> {
        gate.validate(self.n_qubits)?;
        match *gate {
            Gate::H(q) => self.single_qubit(q, |a0, a1| {
                (
                    (a0 + a1) * FRAC_1_SQRT_2,
                    (a0 - a1) * FRAC_1_SQRT_2,
                )
            }),
            Gate::X(q) => self.single_qubit(q, |a0, a1| (a1, a0)),
            Gate::Rx(q, theta) => {
                let c = (theta / 2.0).cos();
                let s = (theta / 2.0).sin();
                let mis = Complex64::new(0.0, -s);
                self.single_qubit(q, |a0, a1| (a0 * c + a1 * mis, a0 * mis + a1 * c));
            }
            Gate::Rz(q, theta) => {
                let m = bit_mask(self.n_qubits, q);
                let p0 = Complex64::from_polar(1.0, -theta / 2.0);
                let p1 = Complex64::from_polar(1.0, theta / 2.0);
                for (i, a) in self.amps.iter_mut().enumerate() {
                    *a *= if i as u64 & m == 0 { p0 } else { p1 };
                }
            }
            Gate::Rzz(qa, qb, theta) => {
                let ma = bit_mask(self.n_qubits, qa);
                let mb = bit_mask(self.n_qubits, qb);
                let equal = Complex64::from_polar(1.0, -theta / 2.0);
                let diff = Complex64::from_polar(1.0, theta / 2.0);
                for (i, a) in self.amps.iter_mut().enumerate() {
                    let i = i as u64;
                    *a *= if (i & ma == 0) == (i & mb == 0) {
                        equal
                    } else {
                        diff
                    };
                }
            }
            Gate::Cz(qa, qb) => {
                let ma = bit_mask(self.n_qubits, qa);
                let mb = bit_mask(self.n_qubits, qb);
                for (i, a) in self.amps.iter_mut().enumerate() {
                    let i = i as u64;
                    if i & ma != 0 && i & mb != 0 {
                        *a = -*a;
                    }
                }
            }
            Gate::Cnot { control, target } => {
                let mc = bit_mask(self.n_qubits, control);
                let mt = bit_mask(self.n_qubits, target);
                for i in 0..self.amps.len() as u64 {
                    if i & mc != 0 && i & mt == 0 {
                        self.amps.swap(i as usize, (i | mt) as usize);
                    }
                }
            }
            Gate::Ccx {
                controls: (c1, c2),
                target,
            } => {
                let m1 = bit_mask(self.n_qubits, c1);
                let m2 = bit_mask(self.n_qubits, c2);
                let mt = bit_mask(self.n_qubits, target);
                for i in 0..self.amps.len() as u64 {
                    if i & m1 != 0 && i & m2 != 0 && i & mt == 0 {
                        self.amps.swap(i as usize, (i | mt) as usize);
                    }
                }
            }
            Gate::Swap(qa, qb) => {
                let ma = bit_mask(self.n_qubits, qa);
                let mb = bit_mask(self.n_qubits, qb);
                for i in 0..self.amps.len() as u64 {
                    if i & ma != 0 && i & mb == 0 {
                        self.amps.swap(i as usize, ((i & !ma) | mb) as usize);
                    }
                }
            }
        }
        Ok(())
    }

    #[inline]
    fn single_qubit(&mut self, qubit: usize, f: impl Fn(Complex64, Complex64) -> (Complex64, Complex64)) {
        let m = bit_mask(self.n_qubits, qubit) as usize;
        let dim = self.amps.len();
        let mut base = 0;
        while base < dim {
            for i0 in base..base + m {
                let i1 = i0 | m;
                let (n0, n1) = f(self.amps[i0], self.amps[i1]);
                self.amps[i0] = n0;
                self.amps[i1] = n1;
            }
            base += 2 * m;
        }
    }

    /// Exact expectation ⟨ψ|P|ψ⟩ of an I/X/Z Pauli string.
    ///
    /// Always real for Hermitian `P`; the (rounding-level) imaginary part is
    /// discarded.
    pub fn expect_pauli(&self, pauli: &PauliString) -> Result<f64> {
        if pauli.n_qubits != self.n_qubits {
            return Err(Error::Dimension {
                context: "pauli width",
                expected: self.n_qubits,
                actual: pauli.n_qubits,
            });
        }
        let x = pauli.x_mask;
        let z = pauli.z_mask;
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, a) in self.amps.iter().enumerate() {
            let i = i as u64;
            let partner = self.amps[(i ^ x) as usize];
            let sign = if ((i ^ x) & z).count_ones() % 2 == 0 {
                1.0
            } else {
                -1.0
            };
            acc += a.conj() * partner * sign;
        }
        Ok(acc.re)
    }

    /// Exact ⟨Z_q⟩ for every qubit in one pass over the amplitudes.
    pub fn z_expectations(&self) -> Vec<f64> {
        let n = self.n_qubits;
        let mut acc = vec![0.0; n];
        for (i, a) in self.amps.iter().enumerate() {
            let p = a.norm_sqr();
            let i = i as u64;
            for (q, entry) in acc.iter_mut().enumerate() {
                if i & bit_mask(n, q) != 0 {
                    *entry -= p;
                } else {
                    *entry += p;
                }
            }
        }
        acc
    }

    /// Sample `shots` independent basis-state measurements from |ψ|².
    pub fn sample_counts<R: Rng + ?Sized>(&self, shots: u64, rng: &mut R) -> Result<ShotCounts> {
        if shots == 0 {
            return Err(Error::ZeroShots);
        }
        // Cumulative distribution, then one binary search per shot.
        let mut cdf = Vec::with_capacity(self.amps.len());
        let mut acc = 0.0;
        for a in &self.amps {
            acc += a.norm_sqr();
            cdf.push(acc);
        }
        // Guard the tail against rounding so u < acc always lands in range.
        let total = acc;
        let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
        for _ in 0..shots {
            let u: f64 = rng.gen::<f64>() * total;
            let idx = cdf.partition_point(|&c| c <= u).min(self.amps.len() - 1);
            *counts.entry(idx as u64).or_insert(0) += 1;
        }
        Ok(ShotCounts {
            n_qubits: self.n_qubits,
            shots,
            counts,
        })
    }

    /// Apply independent RX kicks, one per qubit, with angles drawn uniformly
    /// from `[0, 2π·strength)`. `strength = 0` is exactly a no-op (no RNG
    /// draws), so noiseless runs stay bit-for-bit reproducible.
    pub fn apply_rx_noise<R: Rng + ?Sized>(&self, strength: f64, rng: &mut R) -> Result<StateVector> {
        if !strength.is_finite() || strength < 0.0 {
            return Err(Error::NoiseStrength(strength));
        }
        let mut out = self.clone();
        if strength > 0.0 {
            let hi = 2.0 * std::f64::consts::PI * strength;
            for q in 0..self.n_qubits {
                let angle = rng.gen_range(0.0..hi);
                out.apply_gate_mut(&Gate::Rx(q, angle))?;
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn qubit_zero_is_most_significant() {
        // X on qubit 0 of a 2-qubit register: |00⟩ -> |10⟩ = index 2.
        let s = StateVector::zero(2).unwrap().apply_gate(&Gate::X(0)).unwrap();
        assert_abs_diff_eq!(s.amplitudes()[2].re, 1.0, epsilon = 1e-15);
        // and X on qubit 1: |00⟩ -> |01⟩ = index 1.
        let s = StateVector::zero(2).unwrap().apply_gate(&Gate::X(1)).unwrap();
        assert_abs_diff_eq!(s.amplitudes()[1].re, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn basis_bits_round_trip() {
        let s = StateVector::basis(3, &[1, 0, 1]).unwrap();
        assert_abs_diff_eq!(s.amplitudes()[0b101].re, 1.0, epsilon = 1e-15);
        assert!(StateVector::basis(3, &[1, 0]).is_err());
        assert!(StateVector::basis(3, &[1, 0, 2]).is_err());
    }

    #[test]
    fn rx_sign_convention() {
        // RX(π)|0⟩ = -i|1⟩ under exp(-iθX/2).
        let s = StateVector::zero(1)
            .unwrap()
            .apply_gate(&Gate::Rx(0, std::f64::consts::PI))
            .unwrap();
        assert_abs_diff_eq!(s.amplitudes()[1].im, -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.amplitudes()[1].re, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn rz_sign_convention() {
        // RZ(θ)|0⟩ = e^{-iθ/2}|0⟩; RZ(θ)|1⟩ = e^{+iθ/2}|1⟩.
        let theta = 0.7;
        let s0 = StateVector::zero(1).unwrap().apply_gate(&Gate::Rz(0, theta)).unwrap();
        assert_abs_diff_eq!(s0.amplitudes()[0].im, (-theta / 2.0).sin(), epsilon = 1e-12);
        let s1 = StateVector::basis(1, &[1])
            .unwrap()
            .apply_gate(&Gate::Rz(0, theta))
            .unwrap();
        assert_abs_diff_eq!(s1.amplitudes()[1].im, (theta / 2.0).sin(), epsilon = 1e-12);
    }

    #[test]
    fn rzz_equals_cnot_rz_cnot() {
        let theta = 1.234;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let random = random_state(3, &mut rng);
        let direct = random.apply_gate(&Gate::Rzz(0, 2, theta)).unwrap();
        let mut composed = random.clone();
        for g in [
            Gate::Cnot { control: 0, target: 2 },
            Gate::Rz(2, theta),
            Gate::Cnot { control: 0, target: 2 },
        ] {
            composed = composed.apply_gate(&g).unwrap();
        }
        for (a, b) in direct.amplitudes().iter().zip(composed.amplitudes()) {
            assert_abs_diff_eq!(a.re, b.re, epsilon = 1e-12);
            assert_abs_diff_eq!(a.im, b.im, epsilon = 1e-12);
        }
    }

    #[test]
    fn rotation_periodicity() {
        // RX(0) = I exactly; RX(2π) = -I (global phase); RX(4π) = I.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = random_state(2, &mut rng);
        let tau = 2.0 * std::f64::consts::PI;
        let id = s.apply_gate(&Gate::Rx(1, 0.0)).unwrap();
        assert_abs_diff_eq!(s.fidelity(&id).unwrap(), 1.0, epsilon = 1e-12);
        let minus = s.apply_gate(&Gate::Rx(1, tau)).unwrap();
        let ip = s.inner(&minus).unwrap();
        assert_abs_diff_eq!(ip.re, -1.0, epsilon = 1e-10);
        let full = s.apply_gate(&Gate::Rx(1, 2.0 * tau)).unwrap();
        assert_abs_diff_eq!(s.inner(&full).unwrap().re, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn involutions_and_truth_tables() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s = random_state(3, &mut rng);
        for g in [
            Gate::H(0),
            Gate::X(1),
            Gate::Cz(0, 2),
            Gate::Cnot { control: 2, target: 0 },
            Gate::Swap(0, 1),
            Gate::Ccx { controls: (0, 1), target: 2 },
        ] {
            let twice = s.apply_gate(&g).unwrap().apply_gate(&g).unwrap();
            for (a, b) in s.amplitudes().iter().zip(twice.amplitudes()) {
                assert_abs_diff_eq!(a.re, b.re, epsilon = 1e-12);
                assert_abs_diff_eq!(a.im, b.im, epsilon = 1e-12);
            }
        }
        // CCX truth table: |110⟩ -> |111⟩, |010⟩ untouched.
        let s = StateVector::basis(3, &[1, 1, 0]).unwrap();
        let t = s
            .apply_gate(&Gate::Ccx { controls: (0, 1), target: 2 })
            .unwrap();
        assert_abs_diff_eq!(t.amplitudes()[0b111].re, 1.0, epsilon = 1e-15);
        let s = StateVector::basis(3, &[0, 1, 0]).unwrap();
        let t = s
            .apply_gate(&Gate::Ccx { controls: (0, 1), target: 2 })
            .unwrap();
        assert_abs_diff_eq!(t.amplitudes()[0b010].re, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn swap_is_three_cnots() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = random_state(4, &mut rng);
        let direct = s.apply_gate(&Gate::Swap(1, 3)).unwrap();
        let mut via = s;
        for g in [
            Gate::Cnot { control: 1, target: 3 },
            Gate::Cnot { control: 3, target: 1 },
            Gate::Cnot { control: 1, target: 3 },
        ] {
            via = via.apply_gate(&g).unwrap();
        }
        for (a, b) in direct.amplitudes().iter().zip(via.amplitudes()) {
            assert_abs_diff_eq!(a.re, b.re, epsilon = 1e-12);
            assert_abs_diff_eq!(a.im, b.im, epsilon = 1e-12);
        }
    }

    #[test]
    fn target_validation() {
        let s = StateVector::zero(2).unwrap();
        assert!(matches!(
            s.apply_gate(&Gate::H(2)),
            Err(Error::QubitIndex { index: 2, n_qubits: 2 })
        ));
        assert!(matches!(
            s.apply_gate(&Gate::Rzz(1, 1, 0.3)),
            Err(Error::DuplicateTarget(_))
        ));
        assert!(StateVector::zero(0).is_err());
        assert!(StateVector::zero(MAX_QUBITS + 1).is_err());
        assert!(StateVector::zero(MAX_QUBITS).is_ok());
    }

    #[test]
    fn pauli_expectations_on_known_states() {
        let n = 2;
        let zero = StateVector::zero(n).unwrap();
        let z0 = PauliString::z(n, 0).unwrap();
        let x0 = PauliString::x(n, 0).unwrap();
        assert_abs_diff_eq!(zero.expect_pauli(&z0).unwrap(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(zero.expect_pauli(&x0).unwrap(), 0.0, epsilon = 1e-14);
        let plus = zero.apply_gate(&Gate::H(0)).unwrap();
        assert_abs_diff_eq!(plus.expect_pauli(&x0).unwrap(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(plus.expect_pauli(&z0).unwrap(), 0.0, epsilon = 1e-14);
        // identity string always gives 1
        let id = PauliString::identity(n).unwrap();
        assert_abs_diff_eq!(plus.expect_pauli(&id).unwrap(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn z_expectations_match_pauli_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let s = random_state(4, &mut rng);
        let fast = s.z_expectations();
        for q in 0..4 {
            let slow = s.expect_pauli(&PauliString::z(4, q).unwrap()).unwrap();
            assert_abs_diff_eq!(fast[q], slow, epsilon = 1e-12);
        }
    }

    #[test]
    fn tensor_ordering() {
        // |1⟩ ⊗ |0⟩ = |10⟩ -> index 2 on two qubits.
        let one = StateVector::basis(1, &[1]).unwrap();
        let zero = StateVector::zero(1).unwrap();
        let joint = one.tensor(&zero).unwrap();
        assert_abs_diff_eq!(joint.amplitudes()[0b10].re, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn sampling_is_seed_deterministic_and_consistent() {
        let s = StateVector::zero(3)
            .unwrap()
            .apply_gate(&Gate::H(0))
            .unwrap()
            .apply_gate(&Gate::H(2))
            .unwrap();
        let mut rng_a = ChaCha8Rng::seed_from_u64(42);
        let mut rng_b = ChaCha8Rng::seed_from_u64(42);
        let ca = s.sample_counts(500, &mut rng_a).unwrap();
        let cb = s.sample_counts(500, &mut rng_b).unwrap();
        assert_eq!(ca, cb);
        assert_eq!(ca.counts.values().sum::<u64>(), 500);
        // only basis states with support appear: qubit 1 is always 0
        for &idx in ca.counts.keys() {
            assert_eq!(idx & 0b010, 0);
        }
        assert!(s.sample_counts(0, &mut rng_a).is_err());
    }

    #[test]
    fn shot_estimator_tracks_exact_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        let s = random_state(3, &mut rng);
        let counts = s.sample_counts(2_000_000, &mut rng).unwrap();
        let est = counts.z_estimates();
        let exact = s.z_expectations();
        for (e, x) in est.iter().zip(&exact) {
            // Hoeffding at 2e6 shots: |err| < 0.004 except with vanishing odds.
            assert!((e - x).abs() < 4e-3, "estimate {e} vs exact {x}");
        }
    }

    #[test]
    fn rx_noise_preserves_norm_and_zero_strength_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let s = random_state(4, &mut rng);
        let noisy = s.apply_rx_noise(0.3, &mut rng).unwrap();
        assert_abs_diff_eq!(noisy.norm(), 1.0, epsilon = 1e-12);
        let before = rng.clone();
        let silent = s.apply_rx_noise(0.0, &mut rng).unwrap();
        assert_eq!(s, silent);
        // strength 0 consumed no randomness
        assert_eq!(rng, before);
        assert!(s.apply_rx_noise(-0.1, &mut rng).is_err());
        assert!(s.apply_rx_noise(f64::NAN, &mut rng).is_err());
    }

    #[test]
    fn from_amplitudes_validation() {
        let good = vec![c(FRAC_1_SQRT_2, 0.0), c(0.0, FRAC_1_SQRT_2)];
        assert!(StateVector::from_amplitudes(1, good).is_ok());
        assert!(StateVector::from_amplitudes(1, vec![c(1.0, 0.0)]).is_err());
        assert!(StateVector::from_amplitudes(1, vec![c(1.0, 0.0), c(0.5, 0.0)]).is_err());
        assert!(StateVector::from_amplitudes(1, vec![c(f64::NAN, 0.0), c(0.0, 0.0)]).is_err());
    }

    pub(super) fn random_state<R: Rng>(n: usize, rng: &mut R) -> StateVector {
        let dim = 1usize << n;
        let mut amps: Vec<Complex64> = (0..dim)
            .map(|_| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        for a in &mut amps {
            *a /= norm;
        }
        StateVector { n_qubits: n, amps }
    }
}
