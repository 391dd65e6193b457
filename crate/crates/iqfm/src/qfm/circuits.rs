//! Circuit construction for the three stages of a layer: random
//! preprocessing, data embedding, and measurement-basis rotation.
//!
//! The angle tables store raw draws `u ∈ [0, 2π)` for circuit factors of the
//! form `exp(+i·u·P)`; with the gate kernels defined as `exp(−i·θ·P/2)`, the
//! gate angle is `−2u`. The embedding equation is already written with
//! `exp(−i·/2)` factors, so its angles pass through unchanged. Products of
//! exponentials are applied right-to-left, i.e. the rightmost factor of each
//! written product acts on the state first.

use super::IqfmModel;
use crate::error::{Error, Result};
use crate::statevector::{Circuit, Gate};

/// One RZZ per ring bond `(j, j+1 mod n)`; a 1-qubit ring has no bonds. The
/// degenerate `n = 2` ring keeps both table entries and emits two gates on
/// the single bond, so every table column is consumed at any size.
fn rzz_ring(circuit: &mut Circuit, n: usize, angle: impl Fn(usize) -> f64) {
    if n < 2 {
        return;
    }
    for j in 0..n {
        circuit.push(Gate::Rzz(j, (j + 1) % n, angle(j)));
    }
}

fn rx_row(circuit: &mut Circuit, angles: &[f64]) {
    for (j, &a) in angles.iter().enumerate() {
        circuit.push(Gate::Rx(j, a));
    }
}

/// Random preprocessing stage `P_l` for the given 1-based layer.
///
/// Every layer opens with a Hadamard on each qubit. Layer 1 then runs the
/// deep stage: `d₁` A-blocks (an RX row from `β`, then an RZZ ring from `α`),
/// followed by `d₂` B-blocks. Layers 2.. run only the `d₂` B-blocks (an RX
/// row from `η`, an RZ row from `ζ`, an RX row from `ε`, then an RZZ ring
/// from `γ`). Blocks run in ascending repetition order and all angles are
/// `−2×` the frozen draws.
pub fn build_preprocessing(model: &IqfmModel, layer: usize) -> Result<Circuit> {
    if layer == 0 || layer > model.layers {
        return Err(Error::Config(format!(
            "preprocessing layer {layer} outside 1..={}",
            model.layers
        )));
    }
    let n = model.n_qubits;
    let table = &model.layer_angles[layer - 1];
    let mut circuit = Circuit::new(n);
    for j in 0..n {
        circuit.push(Gate::H(j));
    }
    for (alpha, beta) in table.alpha.iter().zip(&table.beta) {
        let rx: Vec<f64> = beta.iter().map(|u| -2.0 * u).collect();
        rx_row(&mut circuit, &rx);
        rzz_ring(&mut circuit, n, |j| -2.0 * alpha[j]);
    }
    for r in 0..table.gamma.len() {
        let rx: Vec<f64> = table.eta[r].iter().map(|u| -2.0 * u).collect();
        rx_row(&mut circuit, &rx);
        for (j, u) in table.zeta[r].iter().enumerate() {
            circuit.push(Gate::Rz(j, -2.0 * u));
        }
        let rx: Vec<f64> = table.epsilon[r].iter().map(|u| -2.0 * u).collect();
        rx_row(&mut circuit, &rx);
        rzz_ring(&mut circuit, n, |j| -2.0 * table.gamma[r][j]);
    }
    Ok(circuit)
}

/// Data-embedding stage `U_Ψ(h)`.
///
/// `h` is split into `depth` contiguous subvectors of length `n_qubits`;
/// block `m` applies a Hadamard row, then `RZ(h_j)` on each qubit, then an
/// `RZZ(h_j·h_{j+1})` ring with the wrap taken inside the subvector. Blocks
/// run in subvector order, and the angles are the `h` components themselves.
pub fn build_embedding(h: &[f64], n_qubits: usize, depth: usize) -> Result<Circuit> {
    if h.len() != n_qubits * depth {
        return Err(Error::Dimension {
            context: "embedding angle vector",
            expected: n_qubits * depth,
            actual: h.len(),
        });
    }
    let mut circuit = Circuit::new(n_qubits);
    for block in h.chunks_exact(n_qubits) {
        for j in 0..n_qubits {
            circuit.push(Gate::H(j));
        }
        for (j, &a) in block.iter().enumerate() {
            circuit.push(Gate::Rz(j, a));
        }
        rzz_ring(&mut circuit, n_qubits, |j| {
            block[j] * block[(j + 1) % n_qubits]
        });
    }
    Ok(circuit)
}

/// Measurement-basis change for one rotated basis: `RX(θ_j)` on every qubit,
/// with the frozen draws used directly as gate angles.
pub fn basis_rotation(theta: &[f64]) -> Circuit {
    let mut circuit = Circuit::new(theta.len());
    rx_row(&mut circuit, theta);
    circuit
}
