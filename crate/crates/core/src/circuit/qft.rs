use std::f64::consts::PI;

use super::{Circuit, Gate};

/// Quantum Fourier transform on `qubits` (least significant first):
/// `|x> -> 2^{-m/2} sum_y exp(2 pi i x y / 2^m) |y>`.
///
/// Without the terminal swaps the output bits come out in reverse order,
/// which is the order the Fourier-basis adders expect.
pub fn qft_gates(qubits: &[usize], swaps: bool) -> Vec<Gate> {
    let m = qubits.len();
    let mut gates = Vec::with_capacity(m * (m + 1) / 2 + m / 2);
    for j in (0..m).rev() {
        gates.push(Gate::H(qubits[j]));
        for k in (0..j).rev() {
            gates.push(Gate::CPhase(qubits[k], qubits[j], PI / (1u64 << (j - k)) as f64));
        }
    }
    if swaps {
        for i in 0..m / 2 {
            gates.push(Gate::Swap(qubits[i], qubits[m - 1 - i]));
        }
    }
    gates
}

pub fn inverse_qft_gates(qubits: &[usize], swaps: bool) -> Vec<Gate> {
    qft_gates(qubits, swaps).iter().rev().map(Gate::inverse).collect()
}

pub fn qft_circuit(n: usize) -> Circuit {
    assert!(n >= 1, "QFT needs at least one qubit");
    let qubits: Vec<usize> = (0..n).collect();
    let mut c = Circuit::new(n);
    c.gates = qft_gates(&qubits, true);
    c
}

pub fn inverse_qft_circuit(n: usize) -> Circuit {
    assert!(n >= 1, "QFT needs at least one qubit");
    let qubits: Vec<usize> = (0..n).collect();
    let mut c = Circuit::new(n);
    c.gates = inverse_qft_gates(&qubits, true);
    c
}
