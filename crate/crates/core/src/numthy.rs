//! Classical number theory for the factoring pipeline.
//!
//! Everything here is a pure function of its arguments. Values are `u64`;
//! products are formed in `u128`, so every routine is exact for moduli up to
//! `u64::MAX`.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Greatest common divisor by the Euclidean algorithm. `gcd(0, 0)` is 0.
pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

#[inline]
pub fn mul_mod(a: u64, b: u64, n: u64) -> u64 {
    ((a as u128 * b as u128) % n as u128) as u64
}

/// `a^e mod n` by square-and-multiply.
pub fn mod_pow(a: u64, mut e: u64, n: u64) -> u64 {
    assert!(n >= 1, "modulus must be positive");
    if n == 1 {
        return 0;
    }
    let mut base = a % n;
    let mut acc = 1u64;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod(acc, base, n);
        }
        base = mul_mod(base, base, n);
        e >>= 1;
    }
    acc
}

/// Inverse of `a` modulo `n`, if it exists.
pub fn mod_inverse(a: u64, n: u64) -> Option<u64> {
    if n == 0 {
        return None;
    }
    let (mut old_r, mut r) = (a as i128 % n as i128, n as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let quot = old_r / r;
        (old_r, r) = (r, old_r - quot * r);
        (old_s, s) = (s, old_s - quot * s);
    }
    if old_r != 1 {
        return if n == 1 { Some(0) } else { None };
    }
    Some(old_s.rem_euclid(n as i128) as u64)
}

/// Smallest `r >= 1` with `a^r = 1 (mod n)`, found by stepping through the
/// powers of `a`. This is the brute-force reference for the quantum routine.
pub fn multiplicative_order(a: u64, n: u64) -> Result<u64> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("modulus {n} < 2")));
    }
    if gcd(a, n) != 1 {
        return Err(Error::NotCoprime { a, n });
    }
    let a = a % n;
    let mut x = a;
    let mut r = 1u64;
    while x != 1 {
        x = mul_mod(x, a, n);
        r += 1;
    }
    Ok(r)
}

/// Number of significant bits in `n` (0 for 0).
pub fn bit_length(n: u64) -> u32 {
    u64::BITS - n.leading_zeros()
}

/// Deterministic Miller-Rabin; exact for every `u64`.
pub fn is_prime(n: u64) -> bool {
    const WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &p in &WITNESSES {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &a in &WITNESSES {
        let mut x = mod_pow(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn smallest_factor(n: u64) -> u64 {
    if n.is_multiple_of(2) {
        return 2;
    }
    let mut d = 3u64;
    while d.saturating_mul(d) <= n {
        if n.is_multiple_of(d) {
            return d;
        }
        d += 2;
    }
    n
}

/// An odd square-free semiprime `N = p * q` with `p < q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SemiprimeSpec {
    pub value: u64,
    pub p: u64,
    pub q: u64,
    pub bit_length: u32,
}

impl SemiprimeSpec {
    /// Validates `n` by trial division.
    pub fn new(n: u64) -> Result<Self> {
        if n < 15 || n.is_multiple_of(2) {
            return Err(Error::NotSemiprime(n));
        }
        let p = smallest_factor(n);
        let q = n / p;
        if p == n || p == q || !is_prime(q) {
            return Err(Error::NotSemiprime(n));
        }
        Ok(Self { value: n, p, q, bit_length: bit_length(n) })
    }

    pub fn from_factors(p: u64, q: u64) -> Result<Self> {
        let (p, q) = if p <= q { (p, q) } else { (q, p) };
        let n = p.checked_mul(q).ok_or_else(|| Error::InvalidArgument(format!("{p} * {q} overflows")))?;
        if p == q || p == 2 || !is_prime(p) || !is_prime(q) {
            return Err(Error::NotSemiprime(n));
        }
        Ok(Self { value: n, p, q, bit_length: bit_length(n) })
    }
}

/// Smallest `a` in `[2, N-2]` with `a^2 = 1 (mod N)`.
///
/// An odd square-free semiprime has exactly four square roots of unity; the
/// two that are not `±1` give both factors through `gcd(a ± 1, N)`, and their
/// multiplicative order is 2.
pub fn preselect_base(n: &SemiprimeSpec) -> u64 {
    let m = n.value;
    (2..m - 1)
        .find(|&a| mul_mod(a, a, m) == 1)
        .expect("odd square-free semiprimes always have a nontrivial square root of unity")
}

/// Partial quotients and convergents of `target_numerator / target_denominator`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContinuedFractionExpansion {
    pub target_numerator: u64,
    pub target_denominator: u64,
    pub partial_quotients: Vec<u64>,
    /// `(p_k, q_k)` pairs, each in lowest terms.
    pub convergents: Vec<(u64, u64)>,
}

/// Expands `y / q` with the Euclidean algorithm.
///
/// # Panics
/// If `q == 0`.
pub fn cf_expand(y: u64, q: u64) -> ContinuedFractionExpansion {
    assert!(q > 0, "denominator must be positive");
    let mut quotients = Vec::new();
    let (mut num, mut den) = (y as u128, q as u128);
    loop {
        quotients.push((num / den) as u64);
        let rem = num % den;
        if rem == 0 {
            break;
        }
        (num, den) = (den, rem);
    }

    let mut convergents = Vec::with_capacity(quotients.len());
    // seeds: (p_{-2}, q_{-2}) = (0, 1), (p_{-1}, q_{-1}) = (1, 0)
    let (mut p2, mut q2, mut p1, mut q1) = (0u128, 1u128, 1u128, 0u128);
    for &a in &quotients {
        let a = a as u128;
        let (p, qk) = (a * p1 + p2, a * q1 + q2);
        convergents.push((p as u64, qk as u64));
        (p2, q2, p1, q1) = (p1, q1, p, qk);
    }

    ContinuedFractionExpansion { target_numerator: y, target_denominator: q, partial_quotients: quotients, convergents }
}

/// Recovers an order candidate from a phase measurement `y` on `t` counting
/// qubits: the first convergent denominator `q <= n` of `y / 2^t` with
/// `a^q = 1 (mod n)`. `None` means the shot carried no usable information.
pub fn extract_order(y: u64, t: u32, a: u64, n: u64) -> Option<u64> {
    assert!(t < 64, "counting register too wide");
    let expansion = cf_expand(y, 1u64 << t);
    expansion.convergents.iter().map(|&(_, q)| q).take_while(|&q| q <= n).find(|&q| q >= 1 && mod_pow(a, q, n) == 1)
}

/// Seeded sample of odd square-free semiprimes for each bit length in
/// `min_bits..=max_bits`, at most `count_per_bit` each, ascending within a bit
/// length. Bit lengths with fewer candidates return all of them.
pub fn generate_semiprimes(
    min_bits: u32,
    max_bits: u32,
    count_per_bit: usize,
    seed: u64,
) -> Result<Vec<SemiprimeSpec>> {
    if min_bits < 4 || min_bits > max_bits || max_bits > 48 {
        return Err(Error::InvalidArgument(format!(
            "bit range {min_bits}..={max_bits} must satisfy 4 <= min <= max <= 48"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for bits in min_bits..=max_bits {
        let lo = 1u64 << (bits - 1);
        let hi = (1u64 << bits) - 1;
        let mut picked: Vec<SemiprimeSpec> = if bits <= 16 {
            let mut all: Vec<_> = (lo | 1..=hi).step_by(2).filter_map(|n| SemiprimeSpec::new(n).ok()).collect();
            all.shuffle(&mut rng);
            all.truncate(count_per_bit);
            all
        } else {
            let mut seen = std::collections::BTreeSet::new();
            let mut tries = 0usize;
            while seen.len() < count_per_bit && tries < 1_000_000 {
                tries += 1;
                let n = rng.gen_range(lo..=hi) | 1;
                if let Ok(spec) = SemiprimeSpec::new(n) {
                    seen.insert(spec);
                }
            }
            seen.into_iter().collect()
        };
        if picked.is_empty() && count_per_bit > 0 {
            return Err(Error::NoSemiprimes(bits));
        }
        picked.sort();
        out.extend(picked);
    }
    Ok(out)
}

/// Largest RSA modulus bit length whose order-finding circuit fits in `qubits`
/// qubits under the `2n` counting + `n` work + `n + 2` ancilla layout.
pub fn breakable_bits(qubits: u64) -> Result<u64> {
    if qubits < 6 {
        return Err(Error::InvalidArgument(format!("need at least 6 qubits, got {qubits}")));
    }
    Ok((qubits - 2) / 4)
}
