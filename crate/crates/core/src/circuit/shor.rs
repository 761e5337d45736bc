use super::arith::controlled_modular_multiplier;
use super::qft::inverse_qft_gates;
use super::{Circuit, Gate, RegisterLayout, RegisterOrdering};
use crate::error::{Error, Result};
use crate::numthy::{bit_length, gcd, mul_mod};

/// Order-finding circuit for `a` modulo `n` on `4 * bitlen(n) + 2` qubits in
/// Upper-Lower-Ancilla order.
///
/// Counting qubit `j` controls multiplication by `a^(2^j) mod n`. Blocks whose
/// multiplier is 1 are the identity and are left out, so a base of order 2
/// costs a single multiplier. Markers: `state_prep`, `mult_<j>` after each
/// emitted block and `inverse_qft` at the end.
pub fn shor_order_circuit(n: u64, a: u64) -> Result<Circuit> {
    if n.is_multiple_of(2) || n < 15 {
        return Err(Error::InvalidArgument(format!("modulus {n} must be odd and at least 15")));
    }
    if gcd(a, n) != 1 {
        return Err(Error::NotCoprime { a, n });
    }
    let n_bits = bit_length(n) as usize;
    let layout = RegisterLayout::new(n_bits, RegisterOrdering::UpperLowerAncilla);
    let mut c = Circuit::new(layout.width());

    c.mark("initial");
    c.extend(layout.upper.iter().map(|&q| Gate::H(q)))?;
    c.push(Gate::X(layout.lower[0]))?;
    c.mark("state_prep");

    let mut multiplier = a % n;
    for (j, &control) in layout.upper.iter().enumerate() {
        if multiplier != 1 {
            c.extend(controlled_modular_multiplier(multiplier, n, control, &layout)?)?;
            c.mark(format!("mult_{j}"));
        }
        multiplier = mul_mod(multiplier, multiplier, n);
    }

    c.extend(inverse_qft_gates(&layout.upper, true))?;
    c.mark("inverse_qft");
    c.measured = layout.upper.clone();
    c.layout = Some(layout);
    Ok(c)
}
