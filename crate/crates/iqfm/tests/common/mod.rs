//! Shared helpers for integration tests: an independent dense-matrix model of
//! every gate, built from Kronecker products and explicit basis embedding.
//!
//! Nothing here touches the simulator's bit-twiddling kernels, so agreement
//! between the two paths is meaningful evidence rather than a tautology.

#![allow(dead_code)]

use iqfm::statevector::{Circuit, Gate, StateVector};
use ndarray::Array2;
use num_complex::Complex64;
use rand::Rng;

pub type CMat = Array2<Complex64>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Array2::zeros((ar * br, ac * bc));
    for i in 0..ar {
        for j in 0..ac {
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = a[(i, j)] * b[(k, l)];
                }
            }
        }
    }
    out
}

pub fn identity(dim: usize) -> CMat {
    Array2::eye(dim).mapv(|x: f64| c(x, 0.0))
}

/// Local unitary of a gate together with the qubits it acts on, in the order
/// matching the matrix's tensor-factor layout (first listed qubit = most
/// significant bit of the local index).
pub fn gate_matrix(gate: &Gate) -> (CMat, Vec<usize>) {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    match *gate {
        Gate::H(q) => (
            Array2::from_shape_vec((2, 2), vec![c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0)])
                .unwrap(),
            vec![q],
        ),
        Gate::X(q) => (
            Array2::from_shape_vec((2, 2), vec![c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)])
                .unwrap(),
            vec![q],
        ),
        Gate::Rx(q, theta) => {
            let (co, si) = ((theta / 2.0).cos(), (theta / 2.0).sin());
            (
                Array2::from_shape_vec(
                    (2, 2),
                    vec![c(co, 0.0), c(0.0, -si), c(0.0, -si), c(co, 0.0)],
                )
                .unwrap(),
                vec![q],
            )
        }
        Gate::Rz(q, theta) => {
            let phase = Complex64::from_polar(1.0, theta / 2.0);
            (
                Array2::from_diag(&ndarray::arr1(&[phase.conj(), phase])),
                vec![q],
            )
        }
        Gate::Rzz(a, b, theta) => {
            let p = Complex64::from_polar(1.0, theta / 2.0);
            // Z⊗Z eigenvalue +1 on |00⟩,|11⟩ picks up e^{-iθ/2}.
            (
                Array2::from_diag(&ndarray::arr1(&[p.conj(), p, p, p.conj()])),
                vec![a, b],
            )
        }
        Gate::Cz(a, b) => (
            Array2::from_diag(&ndarray::arr1(&[
                c(1.0, 0.0),
                c(1.0, 0.0),
                c(1.0, 0.0),
                c(-1.0, 0.0),
            ])),
            vec![a, b],
        ),
        Gate::Cnot { control, target } => {
            let mut m = Array2::zeros((4, 4));
            m[(0, 0)] = c(1.0, 0.0);
            m[(1, 1)] = c(1.0, 0.0);
            m[(2, 3)] = c(1.0, 0.0);
            m[(3, 2)] = c(1.0, 0.0);
            (m, vec![control, target])
        }
        Gate::Ccx { controls, target } => {
            let mut m = identity(8);
            m[(6, 6)] = c(0.0, 0.0);
            m[(7, 7)] = c(0.0, 0.0);
            m[(6, 7)] = c(1.0, 0.0);
            m[(7, 6)] = c(1.0, 0.0);
            (m, vec![controls.0, controls.1, target])
        }
        Gate::Swap(a, b) => {
            let mut m = Array2::zeros((4, 4));
            m[(0, 0)] = c(1.0, 0.0);
            m[(1, 2)] = c(1.0, 0.0);
            m[(2, 1)] = c(1.0, 0.0);
            m[(3, 3)] = c(1.0, 0.0);
            (m, vec![a, b])
        }
    }
}

/// Embed a 2^k x 2^k local unitary acting on `qubits` into the full
/// 2^n x 2^n space, with qubit 0 as the most significant bit.
pub fn embed(local: &CMat, qubits: &[usize], n_qubits: usize) -> CMat {
    let dim = 1usize << n_qubits;
    let k = qubits.len();
    let mut full = Array2::zeros((dim, dim));
    for col in 0..dim {
        let mut sub_col = 0usize;
        for (pos, &q) in qubits.iter().enumerate() {
            let bit = (col >> (n_qubits - 1 - q)) & 1;
            sub_col |= bit << (k - 1 - pos);
        }
        for sub_row in 0..(1 << k) {
            let amp = local[(sub_row, sub_col)];
            if amp == c(0.0, 0.0) {
                continue;
            }
            let mut row = col;
            for (pos, &q) in qubits.iter().enumerate() {
                let bit = (sub_row >> (k - 1 - pos)) & 1;
                let mask = 1usize << (n_qubits - 1 - q);
                row = (row & !mask) | (bit * mask);
            }
            full[(row, col)] = amp;
        }
    }
    full
}

pub fn gate_full_matrix(gate: &Gate, n_qubits: usize) -> CMat {
    let (local, qubits) = gate_matrix(gate);
    embed(&local, &qubits, n_qubits)
}

/// Apply a whole circuit through the dense-matrix path.
pub fn apply_dense(circuit: &Circuit, amps: &[Complex64]) -> Vec<Complex64> {
    let mut v = amps.to_vec();
    for gate in circuit.gates() {
        let m = gate_full_matrix(gate, circuit.n_qubits());
        let mut next = vec![Complex64::new(0.0, 0.0); v.len()];
        for (row, out) in next.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (col, x) in v.iter().enumerate() {
                acc += m[(row, col)] * x;
            }
            *out = acc;
        }
        v = next;
    }
    v
}

const PAULI_I: [[f64; 2]; 2] = [[1.0, 0.0], [0.0, 1.0]];
const PAULI_X: [[f64; 2]; 2] = [[0.0, 1.0], [1.0, 0.0]];
const PAULI_Z: [[f64; 2]; 2] = [[1.0, 0.0], [0.0, -1.0]];

/// Dense matrix of a tensor product of I/X/Z letters (letter per qubit,
/// index 0 first = most significant).
pub fn pauli_full_matrix(letters: &[char]) -> CMat {
    let mut m = identity(1);
    for &l in letters {
        let local = match l {
            'I' => PAULI_I,
            'X' => PAULI_X,
            'Z' => PAULI_Z,
            other => panic!("unsupported Pauli letter {other}"),
        };
        let local = Array2::from_shape_fn((2, 2), |(i, j)| c(local[i][j], 0.0));
        m = kron(&m, &local);
    }
    m
}

pub fn expectation_dense(m: &CMat, amps: &[Complex64]) -> f64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, a) in amps.iter().enumerate() {
        let mut row = Complex64::new(0.0, 0.0);
        for (j, b) in amps.iter().enumerate() {
            row += m[(i, j)] * b;
        }
        acc += a.conj() * row;
    }
    acc.re
}

/// Haar-ish random state: iid complex Gaussians, normalized.
pub fn random_state(n_qubits: usize, rng: &mut impl Rng) -> StateVector {
    use rand::distributions::Distribution;
    let normal = rand::distributions::Uniform::new(-1.0f64, 1.0);
    let dim = 1usize << n_qubits;
    let mut amps: Vec<Complex64> = (0..dim)
        .map(|_| Complex64::new(normal.sample(rng), normal.sample(rng)))
        .collect();
    let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    for a in &mut amps {
        *a /= norm;
    }
    StateVector::from_amplitudes(n_qubits, amps).expect("normalized by construction")
}

/// Uniformly random gate drawing qubits without replacement.
pub fn random_gate(n_qubits: usize, rng: &mut impl Rng) -> Gate {
    use rand::seq::SliceRandom;
    let mut qs: Vec<usize> = (0..n_qubits).collect();
    qs.shuffle(rng);
    let theta = rng.gen_range(0.0..2.0 * std::f64::consts::PI);
    let two_qubit_ok = n_qubits >= 2;
    let three_qubit_ok = n_qubits >= 3;
    loop {
        match rng.gen_range(0..9u8) {
            0 => return Gate::H(qs[0]),
            1 => return Gate::X(qs[0]),
            2 => return Gate::Rx(qs[0], theta),
            3 => return Gate::Rz(qs[0], theta),
            4 if two_qubit_ok => return Gate::Rzz(qs[0], qs[1], theta),
            5 if two_qubit_ok => return Gate::Cz(qs[0], qs[1]),
            6 if two_qubit_ok => {
                return Gate::Cnot {
                    control: qs[0],
                    target: qs[1],
                }
            }
            7 if three_qubit_ok => {
                return Gate::Ccx {
                    controls: (qs[0], qs[1]),
                    target: qs[2],
                }
            }
            8 if two_qubit_ok => return Gate::Swap(qs[0], qs[1]),
            _ => continue,
        }
    }
}

pub fn random_circuit(n_qubits: usize, n_gates: usize, rng: &mut impl Rng) -> Circuit {
    let mut circuit = Circuit::new(n_qubits);
    for _ in 0..n_gates {
        circuit.push(random_gate(n_qubits, rng));
    }
    circuit
}

pub fn max_amp_diff(a: &StateVector, b: &[Complex64]) -> f64 {
    a.amplitudes()
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}
