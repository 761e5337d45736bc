//! Reversible modular arithmetic built from Fourier-basis adders.
//!
//! The accumulator `b` has `n + 1` qubits and lives in the Fourier basis
//! produced by [`qft_gates`] without terminal swaps. Adding a classical
//! constant is then a row of single-qubit phases; controls turn them into
//! controlled phases. The doubly-controlled form is emitted already split
//! into two-qubit gates.

use std::f64::consts::PI;

use super::qft::{inverse_qft_gates, qft_gates};
use super::{Gate, RegisterLayout};
use crate::error::{Error, Result};
use crate::numthy::{gcd, mod_inverse, mul_mod};

/// Phase angles that add `value` (mod `2^m`) to an `m`-qubit Fourier-basis
/// accumulator. Qubit `k` of the unswapped transform holds weight `2^{m-1-k}`.
fn adder_angles(value: u64, m: usize) -> Vec<f64> {
    let modulus = 1u128 << m;
    (0..m)
        .map(|k| {
            let units = (value as u128 * (1u128 << (m - 1 - k))) % modulus;
            2.0 * PI * units as f64 / modulus as f64
        })
        .collect()
}

/// Adds `value` (subtracts when `negate`) into the Fourier-basis register `b`,
/// conditioned on every qubit in `controls` (at most two).
fn phi_add(value: u64, negate: bool, controls: &[usize], b: &[usize]) -> Vec<Gate> {
    let sign = if negate { -1.0 } else { 1.0 };
    let angles: Vec<(usize, f64)> = adder_angles(value, b.len())
        .into_iter()
        .zip(b)
        .filter(|(t, _)| *t != 0.0)
        .map(|(t, &q)| (q, sign * t))
        .collect();
    match *controls {
        [] => angles.iter().map(|&(q, t)| Gate::Phase(q, t)).collect(),
        [c] => angles.iter().map(|&(q, t)| Gate::CPhase(c, q, t)).collect(),
        [c1, c2] => {
            // CCP(t) = CP(t/2)[c2] CX(c1,c2) CP(-t/2)[c2] CX(c1,c2) CP(t/2)[c1];
            // the diagonal pieces commute, so each row is batched.
            let mut out = Vec::with_capacity(3 * angles.len() + 2);
            out.extend(angles.iter().map(|&(q, t)| Gate::CPhase(c2, q, t / 2.0)));
            out.push(Gate::CX(c1, c2));
            out.extend(angles.iter().map(|&(q, t)| Gate::CPhase(c2, q, -t / 2.0)));
            out.push(Gate::CX(c1, c2));
            out.extend(angles.iter().map(|&(q, t)| Gate::CPhase(c1, q, t / 2.0)));
            out
        }
        _ => panic!("phi_add supports at most two controls"),
    }
}

/// Controlled `b -> (b + a) mod n` on a Fourier-basis accumulator `b` of
/// `bitlen(n) + 1` qubits, using `flag` as the overflow ancilla. Requires
/// `a < n` and `b < n` on entry; leaves `flag` clean.
pub fn phi_add_mod(a: u64, n: u64, controls: &[usize], b: &[usize], flag: usize) -> Vec<Gate> {
    let msb = *b.last().expect("empty accumulator");
    let mut g = Vec::new();
    g.extend(phi_add(a, false, controls, b));
    g.extend(phi_add(n, true, &[], b));
    g.extend(inverse_qft_gates(b, false));
    g.push(Gate::CX(msb, flag));
    g.extend(qft_gates(b, false));
    g.extend(phi_add(n, false, &[flag], b));
    g.extend(phi_add(a, true, controls, b));
    g.extend(inverse_qft_gates(b, false));
    g.push(Gate::X(msb));
    g.push(Gate::CX(msb, flag));
    g.push(Gate::X(msb));
    g.extend(qft_gates(b, false));
    g.extend(phi_add(a, false, controls, b));
    g
}

/// `b -> b + a * x mod n`, controlled on `control`, for `x` in `work`.
fn controlled_mult_add(a: u64, n: u64, control: usize, work: &[usize], b: &[usize], flag: usize) -> Vec<Gate> {
    let mut g = qft_gates(b, false);
    let mut term = a % n;
    for &x in work {
        g.extend(phi_add_mod(term, n, &[control, x], b, flag));
        term = mul_mod(term, 2, n);
    }
    g.extend(inverse_qft_gates(b, false));
    g
}

/// `|c>|x>|0> -> |c>|a x mod n>|0>` when the control is set, identity when it
/// is clear, for work-register values `x < n`. The accumulator is the first
/// `n_bits + 1` ancilla qubits and the last ancilla is the overflow flag.
pub fn controlled_modular_multiplier(a: u64, n: u64, control: usize, layout: &RegisterLayout) -> Result<Vec<Gate>> {
    if gcd(a, n) != 1 {
        return Err(Error::NotCoprime { a, n });
    }
    let inv = mod_inverse(a, n).ok_or(Error::NotCoprime { a, n })?;
    let n_bits = layout.n_bits();
    let b = &layout.ancilla[..n_bits + 1];
    let flag = layout.ancilla[n_bits + 1];
    let work = &layout.lower;

    let mut g = controlled_mult_add(a, n, control, work, b, flag);
    for (&x, &acc) in work.iter().zip(b) {
        g.push(Gate::CSwap(control, x, acc));
    }
    let undo = controlled_mult_add(inv, n, control, work, b, flag);
    g.extend(undo.iter().rev().map(Gate::inverse));
    Ok(g)
}
