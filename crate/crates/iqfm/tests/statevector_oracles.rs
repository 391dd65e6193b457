//! Cross-checks the simulator against an independent dense-matrix model:
//! every gate kernel against its Kronecker-product embedding, Pauli
//! expectations against explicit observable matrices, and norm preservation
//! over long random circuits.

mod common;

use common::{
    apply_dense, expectation_dense, gate_full_matrix, max_amp_diff, pauli_full_matrix,
    random_circuit, random_gate, random_state,
};
use iqfm::statevector::{Circuit, Gate, PauliLetter, PauliString};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Every gate type, every qubit placement, n = 1..4: the bit-twiddling kernel
/// and the dense embedding must agree amplitude-by-amplitude.
#[test]
fn every_gate_matches_dense_embedding() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in 1..=4usize {
        for trial in 0..200 {
            let state = random_state(n, &mut rng);
            let gate = random_gate(n, &mut rng);
            let fast = state.apply_gate(&gate).unwrap();
            let slow = {
                let mut circuit = Circuit::new(n);
                circuit.push(gate.clone());
                apply_dense(&circuit, state.amplitudes())
            };
            let diff = max_amp_diff(&fast, &slow);
            assert!(
                diff <= 1e-12,
                "n={n} trial={trial} gate={gate:?}: max amplitude diff {diff:.3e}"
            );
        }
    }
}

/// Exhaustive single-qubit placements: the embedding itself is exercised for
/// every (gate, qubit) pair rather than only random draws.
#[test]
fn single_qubit_placements_exhaustive() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let n = 4;
    for q in 0..n {
        for gate in [
            Gate::H(q),
            Gate::X(q),
            Gate::Rx(q, 0.7),
            Gate::Rz(q, -1.3),
        ] {
            let state = random_state(n, &mut rng);
            let fast = state.apply_gate(&gate).unwrap();
            let mut circuit = Circuit::new(n);
            circuit.push(gate.clone());
            let slow = apply_dense(&circuit, state.amplitudes());
            assert!(max_amp_diff(&fast, &slow) <= 1e-12, "gate {gate:?}");
        }
    }
}

#[test]
fn hundred_gate_circuits_match_dense() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for trial in 0..20 {
        let n = rng.gen_range(2..=4);
        let circuit = random_circuit(n, 100, &mut rng);
        let state = random_state(n, &mut rng);
        let fast = state.run_circuit(&circuit).unwrap();
        let slow = apply_dense(&circuit, state.amplitudes());
        let diff = max_amp_diff(&fast, &slow);
        assert!(diff <= 1e-12, "trial {trial}: diff {diff:.3e}");
    }
}

#[test]
fn pauli_expectation_matches_observable_matrix() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for n in 1..=4usize {
        for _ in 0..100 {
            let state = random_state(n, &mut rng);
            let letters: Vec<char> = (0..n)
                .map(|_| ['I', 'X', 'Z'][rng.gen_range(0..3)])
                .collect();
            let ops: Vec<(usize, PauliLetter)> = letters
                .iter()
                .enumerate()
                .map(|(q, &l)| {
                    let letter = match l {
                        'I' => PauliLetter::I,
                        'X' => PauliLetter::X,
                        _ => PauliLetter::Z,
                    };
                    (q, letter)
                })
                .collect();
            let pauli = PauliString::from_ops(n, &ops).unwrap();
            let fast = state.expect_pauli(&pauli).unwrap();
            let slow = expectation_dense(&pauli_full_matrix(&letters), state.amplitudes());
            assert!(
                (fast - slow).abs() <= 1e-12,
                "letters {letters:?}: fast {fast} slow {slow}"
            );
        }
    }
}

/// The dense model must itself be unitary — a broken oracle would silently
/// weaken every comparison above.
#[test]
fn dense_model_is_unitary() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for _ in 0..50 {
        let n = rng.gen_range(1..=3);
        let gate = random_gate(n, &mut rng);
        let m = gate_full_matrix(&gate, n);
        let dim = 1usize << n;
        for i in 0..dim {
            for j in 0..dim {
                let mut acc = num_complex::Complex64::new(0.0, 0.0);
                for k in 0..dim {
                    acc += m[(k, i)].conj() * m[(k, j)];
                }
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (acc - expected).norm() <= 1e-12,
                    "gate {gate:?} not unitary at ({i},{j})"
                );
            }
        }
    }
}

proptest! {
    /// Norm drift stays below 1e-10 across 100-gate random circuits.
    #[test]
    fn norm_preserved_over_random_circuits(seed in any::<u64>(), n in 1usize..=5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let circuit = random_circuit(n, 100, &mut rng);
        let state = random_state(n, &mut rng);
        let out = state.run_circuit(&circuit).unwrap();
        prop_assert!((out.norm() - 1.0).abs() <= 1e-10);
    }
}
