//! Backend-agnostic gate-level circuits.
//!
//! Qubit `k` of a register carries the bit of weight `2^k`, and the dense
//! basis index of a width-`w` state is `sum_q bit(q) * 2^q`. Multi-qubit gate
//! matrices list their qubits most-significant first: for `Unitary2(a, b, m)`
//! the row index is `2 * bit(a) + bit(b)`.

mod arith;
mod qft;
mod shor;
mod text;

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, Matrix2, Matrix4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::C64;

pub use arith::{controlled_modular_multiplier, phi_add_mod};
pub use qft::{inverse_qft_circuit, inverse_qft_gates, qft_circuit, qft_gates};
pub use shor::shor_order_circuit;

pub const UNITARY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum Gate {
    H(usize),
    X(usize),
    Phase(usize, f64),
    /// Control, target, angle. Symmetric in its two qubits.
    CPhase(usize, usize, f64),
    /// Control, target.
    CX(usize, usize),
    Swap(usize, usize),
    /// Control, then the two swapped qubits.
    CSwap(usize, usize, usize),
    Unitary1(usize, Box<Matrix2<C64>>),
    Unitary2(usize, usize, Box<Matrix4<C64>>),
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn phase(theta: f64) -> C64 {
    C64::from_polar(1.0, theta)
}

impl Gate {
    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::H(q) | Gate::X(q) | Gate::Phase(q, _) | Gate::Unitary1(q, _) => vec![q],
            Gate::CPhase(a, b, _) | Gate::CX(a, b) | Gate::Swap(a, b) | Gate::Unitary2(a, b, _) => {
                vec![a, b]
            }
            Gate::CSwap(a, b, c) => vec![a, b, c],
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            Gate::H(_) | Gate::X(_) | Gate::Phase(..) | Gate::Unitary1(..) => 1,
            Gate::CSwap(..) => 3,
            _ => 2,
        }
    }

    /// Dense matrix over `qubits()`, first qubit most significant.
    pub fn matrix(&self) -> DMatrix<C64> {
        let z = C64::new(0.0, 0.0);
        let o = c(1.0);
        match self {
            Gate::H(_) => {
                let s = c(std::f64::consts::FRAC_1_SQRT_2);
                DMatrix::from_row_slice(2, 2, &[s, s, s, -s])
            }
            Gate::X(_) => DMatrix::from_row_slice(2, 2, &[z, o, o, z]),
            Gate::Phase(_, t) => DMatrix::from_row_slice(2, 2, &[o, z, z, phase(*t)]),
            Gate::CPhase(_, _, t) => {
                let mut m = DMatrix::identity(4, 4);
                m[(3, 3)] = phase(*t);
                m
            }
            Gate::CX(..) => permutation_matrix(&[0, 1, 3, 2]),
            Gate::Swap(..) => permutation_matrix(&[0, 2, 1, 3]),
            Gate::CSwap(..) => permutation_matrix(&[0, 1, 2, 3, 4, 6, 5, 7]),
            Gate::Unitary1(_, m) => DMatrix::from_iterator(2, 2, m.iter().copied()),
            Gate::Unitary2(_, _, m) => DMatrix::from_iterator(4, 4, m.iter().copied()),
        }
    }

    pub fn inverse(&self) -> Gate {
        match self {
            Gate::Phase(q, t) => Gate::Phase(*q, -t),
            Gate::CPhase(a, b, t) => Gate::CPhase(*a, *b, -t),
            Gate::Unitary1(q, m) => Gate::Unitary1(*q, Box::new(m.adjoint())),
            Gate::Unitary2(a, b, m) => Gate::Unitary2(*a, *b, Box::new(m.adjoint())),
            g => g.clone(),
        }
    }

    pub fn relabel(&self, map: impl Fn(usize) -> usize) -> Gate {
        match self {
            Gate::H(q) => Gate::H(map(*q)),
            Gate::X(q) => Gate::X(map(*q)),
            Gate::Phase(q, t) => Gate::Phase(map(*q), *t),
            Gate::CPhase(a, b, t) => Gate::CPhase(map(*a), map(*b), *t),
            Gate::CX(a, b) => Gate::CX(map(*a), map(*b)),
            Gate::Swap(a, b) => Gate::Swap(map(*a), map(*b)),
            Gate::CSwap(a, b, c) => Gate::CSwap(map(*a), map(*b), map(*c)),
            Gate::Unitary1(q, m) => Gate::Unitary1(map(*q), m.clone()),
            Gate::Unitary2(a, b, m) => Gate::Unitary2(map(*a), map(*b), m.clone()),
        }
    }

    /// Rewrites three-qubit gates into one- and two-qubit gates.
    pub fn lower(&self) -> Vec<Gate> {
        match *self {
            Gate::CSwap(ctl, a, b) => {
                let mut out = vec![Gate::CX(b, a)];
                out.extend(toffoli(ctl, a, b));
                out.push(Gate::CX(b, a));
                out
            }
            ref g => vec![g.clone()],
        }
    }

    /// `max |U^dagger U - I|` over entries.
    pub fn unitarity_defect(&self) -> f64 {
        let m = self.matrix();
        let d = m.adjoint() * &m - DMatrix::identity(m.nrows(), m.ncols());
        d.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

fn permutation_matrix(images: &[usize]) -> DMatrix<C64> {
    let n = images.len();
    let mut m = DMatrix::zeros(n, n);
    for (col, &row) in images.iter().enumerate() {
        m[(row, col)] = c(1.0);
    }
    m
}

fn toffoli(c1: usize, c2: usize, t: usize) -> Vec<Gate> {
    let tg = |q| Gate::Phase(q, PI / 4.0);
    let tdg = |q| Gate::Phase(q, -PI / 4.0);
    vec![
        Gate::H(t),
        Gate::CX(c2, t),
        tdg(t),
        Gate::CX(c1, t),
        tg(t),
        Gate::CX(c2, t),
        tdg(t),
        Gate::CX(c1, t),
        tg(c2),
        tg(t),
        Gate::H(t),
        Gate::CX(c1, c2),
        tg(c1),
        tdg(c2),
        Gate::CX(c1, c2),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Register {
    Upper,
    Lower,
    Ancilla,
}

impl fmt::Display for Register {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Register::Upper => "Upper",
            Register::Lower => "Lower",
            Register::Ancilla => "Ancilla",
        })
    }
}

/// Order of the three registers along the qubit chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegisterOrdering {
    UpperLowerAncilla,
    UpperAncillaLower,
    LowerUpperAncilla,
    LowerAncillaUpper,
    AncillaUpperLower,
    AncillaLowerUpper,
}

impl RegisterOrdering {
    pub const ALL: [RegisterOrdering; 6] = [
        RegisterOrdering::UpperLowerAncilla,
        RegisterOrdering::UpperAncillaLower,
        RegisterOrdering::LowerUpperAncilla,
        RegisterOrdering::LowerAncillaUpper,
        RegisterOrdering::AncillaUpperLower,
        RegisterOrdering::AncillaLowerUpper,
    ];

    pub fn registers(self) -> [Register; 3] {
        use Register::*;
        match self {
            RegisterOrdering::UpperLowerAncilla => [Upper, Lower, Ancilla],
            RegisterOrdering::UpperAncillaLower => [Upper, Ancilla, Lower],
            RegisterOrdering::LowerUpperAncilla => [Lower, Upper, Ancilla],
            RegisterOrdering::LowerAncillaUpper => [Lower, Ancilla, Upper],
            RegisterOrdering::AncillaUpperLower => [Ancilla, Upper, Lower],
            RegisterOrdering::AncillaLowerUpper => [Ancilla, Lower, Upper],
        }
    }
}

impl fmt::Display for RegisterOrdering {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c] = self.registers();
        write!(f, "{a}-{b}-{c}")
    }
}

impl FromStr for RegisterOrdering {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s.chars().filter(|c| c.is_ascii_alphabetic()).collect::<String>().to_ascii_lowercase();
        RegisterOrdering::ALL
            .into_iter()
            .find(|o| o.to_string().replace('-', "").to_ascii_lowercase() == norm)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown register ordering {s:?}")))
    }
}

/// Counting (`upper`, 2n qubits), work (`lower`, n) and `ancilla` (n + 2)
/// registers of an order-finding circuit, each listed least-significant first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegisterLayout {
    pub upper: Vec<usize>,
    pub lower: Vec<usize>,
    pub ancilla: Vec<usize>,
    pub ordering: RegisterOrdering,
}

impl RegisterLayout {
    /// Contiguous layout for an `n_bits` modulus.
    pub fn new(n_bits: usize, ordering: RegisterOrdering) -> Self {
        let mut next = 0;
        let (mut upper, mut lower, mut ancilla) = (Vec::new(), Vec::new(), Vec::new());
        for reg in ordering.registers() {
            let (dst, len) = match reg {
                Register::Upper => (&mut upper, 2 * n_bits),
                Register::Lower => (&mut lower, n_bits),
                Register::Ancilla => (&mut ancilla, n_bits + 2),
            };
            dst.extend(next..next + len);
            next += len;
        }
        Self { upper, lower, ancilla, ordering }
    }

    pub fn n_bits(&self) -> usize {
        self.lower.len()
    }

    pub fn width(&self) -> usize {
        self.upper.len() + self.lower.len() + self.ancilla.len()
    }

    pub fn register(&self, reg: Register) -> &[usize] {
        match reg {
            Register::Upper => &self.upper,
            Register::Lower => &self.lower,
            Register::Ancilla => &self.ancilla,
        }
    }

    /// Chain cuts that separate the registers, with a `Left|Right` label.
    pub fn boundary_cuts(&self) -> Vec<(String, usize)> {
        let regs = self.ordering.registers();
        let mut cuts = Vec::new();
        let mut pos = 0;
        for split in 1..3 {
            pos += self.register(regs[split - 1]).len();
            let left: Vec<String> = regs[..split].iter().map(|r| r.to_string()).collect();
            let right: Vec<String> = regs[split..].iter().map(|r| r.to_string()).collect();
            cuts.push((format!("{}|{}", left.join("+"), right.join("+")), pos));
        }
        cuts
    }
}

/// A labelled position in a gate list: the number of gates applied before it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Marker {
    pub label: String,
    pub position: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    pub width: usize,
    pub gates: Vec<Gate>,
    pub layout: Option<RegisterLayout>,
    pub measured: Vec<usize>,
    pub markers: Vec<Marker>,
}

impl Circuit {
    pub fn new(width: usize) -> Self {
        Self { width, gates: Vec::new(), layout: None, measured: Vec::new(), markers: Vec::new() }
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        self.check_gate(&gate)?;
        self.gates.push(gate);
        Ok(())
    }

    pub fn extend(&mut self, gates: impl IntoIterator<Item = Gate>) -> Result<()> {
        for g in gates {
            self.push(g)?;
        }
        Ok(())
    }

    pub fn mark(&mut self, label: impl Into<String>) {
        self.markers.push(Marker { label: label.into(), position: self.gates.len() });
    }

    fn check_gate(&self, gate: &Gate) -> Result<()> {
        let qs = gate.qubits();
        for &q in &qs {
            if q >= self.width {
                return Err(Error::QubitOutOfRange { qubit: q, width: self.width });
            }
        }
        for (i, a) in qs.iter().enumerate() {
            if qs[i + 1..].contains(a) {
                return Err(Error::DuplicateTargets(qs));
            }
        }
        if matches!(gate, Gate::Unitary1(..) | Gate::Unitary2(..)) {
            let defect = gate.unitarity_defect();
            if defect > UNITARY_TOLERANCE {
                return Err(Error::NotUnitary(defect));
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        for g in &self.gates {
            self.check_gate(g)?;
        }
        for &q in &self.measured {
            if q >= self.width {
                return Err(Error::QubitOutOfRange { qubit: q, width: self.width });
            }
        }
        Ok(())
    }

    /// Gates in reverse order, each inverted. Markers are dropped.
    pub fn inverse(&self) -> Circuit {
        Circuit {
            width: self.width,
            gates: self.gates.iter().rev().map(Gate::inverse).collect(),
            layout: self.layout.clone(),
            measured: self.measured.clone(),
            markers: Vec::new(),
        }
    }

    /// Equivalent circuit with only one- and two-qubit gates; markers keep
    /// pointing at the same logical positions.
    pub fn lowered(&self) -> Circuit {
        let mut gates = Vec::with_capacity(self.gates.len());
        let mut new_pos = Vec::with_capacity(self.gates.len() + 1);
        for g in &self.gates {
            new_pos.push(gates.len());
            gates.extend(g.lower());
        }
        new_pos.push(gates.len());
        Circuit {
            width: self.width,
            gates,
            layout: self.layout.clone(),
            measured: self.measured.clone(),
            markers: self
                .markers
                .iter()
                .map(|m| Marker { label: m.label.clone(), position: new_pos[m.position] })
                .collect(),
        }
    }

    pub fn two_qubit_count(&self) -> usize {
        self.gates.iter().filter(|g| g.arity() >= 2).count()
    }
}

/// Relabels `c` so its registers sit contiguously in `ordering` along the
/// chain. Register-internal order is preserved. Circuits without a layout
/// are returned unchanged.
pub fn reorder_registers(c: &Circuit, ordering: RegisterOrdering) -> Circuit {
    let Some(old) = &c.layout else { return c.clone() };
    let new = RegisterLayout::new(old.n_bits(), ordering);
    let mut map = vec![0usize; c.width];
    for reg in [Register::Upper, Register::Lower, Register::Ancilla] {
        for (&from, &to) in old.register(reg).iter().zip(new.register(reg)) {
            map[from] = to;
        }
    }
    Circuit {
        width: c.width,
        gates: c.gates.iter().map(|g| g.relabel(|q| map[q])).collect(),
        layout: Some(new),
        measured: c.measured.iter().map(|&q| map[q]).collect(),
        markers: c.markers.clone(),
    }
}

fn gaussian(rng: &mut impl Rng) -> f64 {
    // Box-Muller
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}

/// Haar-random `dim x dim` unitary from the QR decomposition of a complex
/// Ginibre matrix, with the diagonal phase of `R` folded back into `Q`.
pub fn random_unitary(dim: usize, rng: &mut impl Rng) -> DMatrix<C64> {
    let g = DMatrix::from_fn(dim, dim, |_, _| C64::new(gaussian(rng), gaussian(rng)));
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    let mut out = q;
    for j in 0..dim {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { c(1.0) };
        for i in 0..dim {
            out[(i, j)] *= ph;
        }
    }
    out
}

/// Seeded random circuit: each layer puts a random one-qubit
/// unitary on every qubit, then random two-qubit unitaries on a random
/// pairing of the qubits (pairs need not be adjacent).
pub fn random_circuit(width: usize, depth: usize, seed: u64) -> Circuit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut circ = Circuit::new(width);
    for _ in 0..depth {
        for q in 0..width {
            let u = random_unitary(2, &mut rng);
            circ.gates.push(Gate::Unitary1(q, Box::new(Matrix2::from_iterator(u.iter().copied()))));
        }
        let mut order: Vec<usize> = (0..width).collect();
        rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut rng);
        for pair in order.chunks_exact(2) {
            let u = random_unitary(4, &mut rng);
            circ.gates.push(Gate::Unitary2(pair[0], pair[1], Box::new(Matrix4::from_iterator(u.iter().copied()))));
        }
    }
    circ
}
