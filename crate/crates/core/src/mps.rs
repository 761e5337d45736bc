//! Matrix product state simulator.
//!
//! An `n`-qubit state is a chain of site tensors `Gamma[l]` (left bond,
//! physical bit, right bond) and bond vectors `lambda[l]` holding the Schmidt
//! coefficients of the cut between qubits `l` and `l + 1`:
//!
//! ```text
//! c(i_1 .. i_n) = Gamma[1]^{i_1} lambda[1] Gamma[2]^{i_2} lambda[2] ... Gamma[n]^{i_n}
//! ```
//!
//! The chain is stored in right-canonical form, `B[l] = Gamma[l] lambda[l]`
//! (with `lambda[n] = 1`). `Gamma[l] = lambda[l-1]^{-1} B[l]` is recovered on
//! demand.
//!
//! Two-qubit gates on non-neighbouring qubits are routed with swaps to
//! adjacency. Within a circuit run the chain returns to qubit order at each
//! checkpoint.

use std::io::Write;
use std::time::Instant;

use faer::Mat;
use nalgebra::{DMatrix, Matrix2, Matrix4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Gate, UNITARY_TOLERANCE};
use crate::error::{Error, Result};
use crate::{Histogram, C64};

/// Largest width [`MpsState::to_statevector`] will expand.
pub const STATEVECTOR_MAX_QUBITS: usize = 24;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationPolicy {
    /// Cap on every bond dimension (the enforced Schmidt number).
    pub chi_max: usize,
    /// Normalised Schmidt coefficients below this are dropped.
    pub discard_threshold: f64,
    pub renormalize: bool,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        Self { chi_max: 64, discard_threshold: 1e-12, renormalize: true }
    }
}

impl TruncationPolicy {
    pub fn new(chi_max: usize, discard_threshold: f64) -> Result<Self> {
        if chi_max < 2 {
            return Err(Error::InvalidArgument(format!("chi_max must be at least 2, got {chi_max}")));
        }
        if !(0.0..1.0).contains(&discard_threshold) {
            return Err(Error::InvalidArgument(format!("discard threshold {discard_threshold} outside [0, 1)")));
        }
        Ok(Self { chi_max, discard_threshold, renormalize: true })
    }

    /// No bond cap; only numerically zero coefficients are dropped.
    pub fn unbounded() -> Self {
        Self { chi_max: usize::MAX, ..Self::default() }
    }
}

/// Counters accumulated while applying gates.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GateStats {
    pub gates: usize,
    /// Largest bond dimension observed (the Schmidt number reached).
    pub peak_chi: usize,
    pub swap_count: usize,
    pub svd_count: usize,
    /// Sum over all truncations of the discarded squared weight.
    pub discarded_weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
struct Site {
    left: usize,
    right: usize,
    /// Index `(a, i, b)` at `(a * 2 + i) * right + b`.
    data: Vec<C64>,
}

impl Site {
    fn product(bit: usize) -> Self {
        let mut data = vec![ZERO; 2];
        data[bit] = C64::new(1.0, 0.0);
        Self { left: 1, right: 1, data }
    }

    #[inline]
    fn at(&self, a: usize, i: usize, b: usize) -> C64 {
        self.data[(a * 2 + i) * self.right + b]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MpsState {
    n: usize,
    sites: Vec<Site>,
    lambdas: Vec<Vec<f64>>,
    /// Chain position of each logical qubit. The identity except while
    /// [`run_circuit_with`](Self::run_circuit_with) is between checkpoints.
    pos: Vec<usize>,
    /// Logical qubit at each chain position.
    at: Vec<usize>,
    pub policy: TruncationPolicy,
    pub stats: GateStats,
}

fn check_unitary(m: &DMatrix<C64>) -> Result<()> {
    let d = m.adjoint() * m - DMatrix::identity(m.nrows(), m.ncols());
    let defect = d.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if defect > UNITARY_TOLERANCE {
        return Err(Error::NotUnitary(defect));
    }
    Ok(())
}

fn swap_matrix() -> Matrix4<C64> {
    let o = C64::new(1.0, 0.0);
    Matrix4::new(o, ZERO, ZERO, ZERO, ZERO, ZERO, o, ZERO, ZERO, o, ZERO, ZERO, ZERO, ZERO, ZERO, o)
}

/// Same operator with the roles of its two qubits exchanged.
fn flip_qubits(u: &Matrix4<C64>) -> Matrix4<C64> {
    let s = swap_matrix();
    s * u * s
}

fn matrix4(g: &Gate) -> Matrix4<C64> {
    match g {
        Gate::Unitary2(_, _, m) => **m,
        _ => Matrix4::from_iterator(g.matrix().iter().copied()),
    }
}

impl MpsState {
    /// `|0...0>` on `n` qubits.
    pub fn new(n: usize, policy: TruncationPolicy) -> Self {
        assert!(n >= 1, "an MPS needs at least one qubit");
        Self {
            n,
            sites: (0..n).map(|_| Site::product(0)).collect(),
            lambdas: vec![vec![1.0]; n - 1],
            pos: (0..n).collect(),
            at: (0..n).collect(),
            policy,
            stats: GateStats { peak_chi: 1, ..GateStats::default() },
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    /// Schmidt coefficients of the cut after qubit `bond` (`0..n-1`).
    pub fn lambda(&self, bond: usize) -> &[f64] {
        &self.lambdas[bond]
    }

    /// `Gamma[l]` as a dense `(left, 2, right)` array, row-major.
    pub fn gamma(&self, l: usize) -> Vec<C64> {
        let site = &self.sites[l];
        let mut out = site.data.clone();
        if l > 0 {
            let lam = &self.lambdas[l - 1];
            for a in 0..site.left {
                for i in 0..2 {
                    for b in 0..site.right {
                        out[(a * 2 + i) * site.right + b] /= lam[a];
                    }
                }
            }
        }
        out
    }

    pub fn bond_dimensions(&self) -> Vec<usize> {
        self.lambdas.iter().map(Vec::len).collect()
    }

    /// Maximum bond dimension over the chain (1 for a product state).
    pub fn schmidt_number(&self) -> usize {
        self.lambdas.iter().map(Vec::len).max().unwrap_or(1)
    }

    /// Stored complex and real entries; `O(chi^2 n)`.
    pub fn tensor_element_count(&self) -> usize {
        self.sites.iter().map(|s| s.data.len()).sum::<usize>() + self.lambdas.iter().map(Vec::len).sum::<usize>()
    }

    /// Von Neumann entropy in bits across the cut between qubits `cut - 1`
    /// and `cut`.
    pub fn bond_entropy(&self, cut: usize) -> f64 {
        assert!(cut >= 1 && cut < self.n, "cut {cut} outside 1..{}", self.n);
        self.lambdas[cut - 1].iter().map(|l| l * l).filter(|&p| p > 0.0).map(|p| -p * p.log2()).sum::<f64>().max(0.0)
    }

    pub fn apply_1q(&mut self, u: &Matrix2<C64>, q: usize) -> Result<()> {
        self.check_qubit(q)?;
        check_unitary(&DMatrix::from_iterator(2, 2, u.iter().copied()))?;
        self.local_1q(u, self.pos[q]);
        self.stats.gates += 1;
        Ok(())
    }

    /// Applies `u` to `(q1, q2)`, routing `q1` next to `q2` with swaps and
    /// back again.
    pub fn apply_2q(&mut self, u: &Matrix4<C64>, q1: usize, q2: usize) -> Result<()> {
        self.check_qubit(q1)?;
        self.check_qubit(q2)?;
        if q1 == q2 {
            return Err(Error::DuplicateTargets(vec![q1, q2]));
        }
        check_unitary(&DMatrix::from_iterator(4, 4, u.iter().copied()))?;
        self.routed_2q(u, q1, q2)?;
        self.restore_layout()?;
        self.stats.gates += 1;
        Ok(())
    }

    pub fn apply_gate(&mut self, g: &Gate) -> Result<()> {
        self.apply_gate_unrestored(g)?;
        self.restore_layout()
    }

    /// Applies `g` but leaves any routed qubit where the routing put it.
    fn apply_gate_unrestored(&mut self, g: &Gate) -> Result<()> {
        for &q in &g.qubits() {
            self.check_qubit(q)?;
        }
        match g.arity() {
            1 => {
                let m = g.matrix();
                self.local_1q(&Matrix2::from_iterator(m.iter().copied()), self.pos[g.qubits()[0]]);
            }
            2 => {
                let qs = g.qubits();
                if qs[0] == qs[1] {
                    return Err(Error::DuplicateTargets(qs));
                }
                self.routed_2q(&matrix4(g), qs[0], qs[1])?;
            }
            _ => {
                for part in g.lower() {
                    self.apply_gate_unrestored(&part)?;
                    self.stats.gates -= 1;
                }
            }
        }
        self.stats.gates += 1;
        Ok(())
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.n {
            Err(Error::QubitOutOfRange { qubit: q, width: self.n })
        } else {
            Ok(())
        }
    }

    fn local_1q(&mut self, u: &Matrix2<C64>, q: usize) {
        let site = &mut self.sites[q];
        let r = site.right;
        for a in 0..site.left {
            for b in 0..r {
                let v0 = site.data[(a * 2) * r + b];
                let v1 = site.data[(a * 2 + 1) * r + b];
                site.data[(a * 2) * r + b] = u[(0, 0)] * v0 + u[(0, 1)] * v1;
                site.data[(a * 2 + 1) * r + b] = u[(1, 0)] * v0 + u[(1, 1)] * v1;
            }
        }
    }

    /// Moves logical qubit `q1` next to `q2` with adjacent swaps, then
    /// applies `u` there.
    fn routed_2q(&mut self, u: &Matrix4<C64>, q1: usize, q2: usize) -> Result<()> {
        let target = self.pos[q2];
        while self.pos[q1] + 1 < target {
            self.swap_adjacent(self.pos[q1])?;
        }
        while self.pos[q1] > target + 1 {
            self.swap_adjacent(self.pos[q1] - 1)?;
        }
        let (p1, p2) = (self.pos[q1], self.pos[q2]);
        if p1 < p2 {
            self.adjacent_2q(u, p1)
        } else {
            self.adjacent_2q(&flip_qubits(u), p2)
        }
    }

    fn swap_adjacent(&mut self, p: usize) -> Result<()> {
        self.adjacent_2q(&swap_matrix(), p)?;
        self.at.swap(p, p + 1);
        self.pos[self.at[p]] = p;
        self.pos[self.at[p + 1]] = p + 1;
        self.stats.swap_count += 1;
        Ok(())
    }

    /// Swaps every qubit back to its own chain position.
    fn restore_layout(&mut self) -> Result<()> {
        for q in 0..self.n {
            while self.pos[q] > q {
                self.swap_adjacent(self.pos[q] - 1)?;
            }
        }
        Ok(())
    }

    /// Applies `u` to qubits `(l, l + 1)`, first qubit most significant, and
    /// re-splits the pair by SVD.
    fn adjacent_2q(&mut self, u: &Matrix4<C64>, l: usize) -> Result<()> {
        let (left, mid, right) = (self.sites[l].left, self.sites[l].right, self.sites[l + 1].right);
        let (sa, sb) = (&self.sites[l], &self.sites[l + 1]);

        // theta[a][ij][c] with ij = 2 i + j
        let mut theta = vec![ZERO; left * 4 * right];
        for a in 0..left {
            for i in 0..2 {
                for b in 0..mid {
                    let x = sa.at(a, i, b);
                    if x == ZERO {
                        continue;
                    }
                    for j in 0..2 {
                        let row = &sb.data[(b * 2 + j) * right..(b * 2 + j + 1) * right];
                        let dst = &mut theta[(a * 4 + 2 * i + j) * right..(a * 4 + 2 * i + j + 1) * right];
                        for (d, y) in dst.iter_mut().zip(row) {
                            *d += x * y;
                        }
                    }
                }
            }
        }

        let mut gated = vec![ZERO; theta.len()];
        for a in 0..left {
            for out in 0..4 {
                let dst = (a * 4 + out) * right;
                for inp in 0..4 {
                    let coeff = u[(out, inp)];
                    if coeff == ZERO {
                        continue;
                    }
                    let src = (a * 4 + inp) * right;
                    for c in 0..right {
                        gated[dst + c] += coeff * theta[src + c];
                    }
                }
            }
        }

        let lam_left: Vec<f64> = if l == 0 { vec![1.0] } else { self.lambdas[l - 1].clone() };
        // rows (a, i), columns (j, c)
        let m = Mat::<C64>::from_fn(2 * left, 2 * right, |r, col| {
            let (a, i) = (r / 2, r % 2);
            let (j, c) = (col / right, col % right);
            gated[(a * 4 + 2 * i + j) * right + c] * lam_left[a]
        });
        let svd = m.thin_svd().map_err(|e| Error::Decomposition(format!("{e:?}")))?;
        let (s_diag, v) = (svd.S(), svd.V());
        let rank = s_diag.dim();
        let v_t = DMatrix::from_fn(rank, 2 * right, |r, col| v[(col, r)].conj());
        let mut order: Vec<usize> = (0..rank).collect();
        order.sort_by(|&x, &y| s_diag[y].re.total_cmp(&s_diag[x].re));
        let sv: Vec<f64> = order.iter().map(|&k| s_diag[k].re).collect();

        let total: f64 = sv.iter().map(|s| s * s).sum();
        let scale = total.sqrt();
        let keep = sv
            .iter()
            .take_while(|&&s| s / scale >= self.policy.discard_threshold && s > 0.0)
            .count()
            .min(self.policy.chi_max);
        if keep == 0 || !scale.is_finite() {
            return Err(Error::EmptyTruncation);
        }
        let kept: f64 = sv[..keep].iter().map(|s| s * s).sum();
        let norm = if self.policy.renormalize { kept.sqrt() } else { scale };

        let new_b = Site {
            left: keep,
            right,
            data: (0..keep)
                .flat_map(|alpha| {
                    let row = order[alpha];
                    let v_t = &v_t;
                    (0..2 * right).map(move |col| v_t[(row, col)])
                })
                .collect(),
        };
        let mut new_a = Site { left, right: keep, data: vec![ZERO; left * 2 * keep] };
        for a in 0..left {
            for i in 0..2 {
                for (alpha, &row) in order[..keep].iter().enumerate() {
                    let mut acc = ZERO;
                    for j in 0..2 {
                        for c in 0..right {
                            acc += gated[(a * 4 + 2 * i + j) * right + c] * v_t[(row, j * right + c)].conj();
                        }
                    }
                    new_a.data[(a * 2 + i) * keep + alpha] = acc / norm;
                }
            }
        }

        self.sites[l] = new_a;
        self.sites[l + 1] = new_b;
        self.lambdas[l] = sv[..keep].iter().map(|s| s / norm).collect();
        self.stats.svd_count += 1;
        self.stats.discarded_weight += (1.0 - kept / total).max(0.0);
        self.stats.peak_chi = self.stats.peak_chi.max(keep);
        Ok(())
    }

    /// Applies every gate of `c` in order and returns the accumulated stats.
    pub fn run_circuit(&mut self, c: &Circuit) -> Result<GateStats> {
        self.run_circuit_with(c, None, &[], |_, _| {})
    }

    /// As [`run_circuit`](Self::run_circuit), checking `deadline` before each
    /// gate and calling `observe(k, state)` once the first `k` gates have
    /// been applied, for each `k` in `checkpoints` (`0` for the initial state).
    ///
    /// Between checkpoints a qubit routed towards a distant partner stays
    /// where it was moved, and the chain is put back in qubit order before
    /// each observation and at the end. Without truncation the final state is
    /// the one that routing every gate out and back would give.
    pub fn run_circuit_with(
        &mut self,
        c: &Circuit,
        deadline: Option<Instant>,
        checkpoints: &[usize],
        mut observe: impl FnMut(usize, &MpsState),
    ) -> Result<GateStats> {
        if c.width != self.n {
            return Err(Error::InvalidArgument(format!("circuit width {} != state width {}", c.width, self.n)));
        }
        let mut wanted: Vec<usize> = checkpoints.to_vec();
        wanted.sort_unstable();
        wanted.dedup();
        let mut next = wanted.iter().peekable();
        while next.next_if(|&&k| k == 0).is_some() {
            observe(0, self);
        }
        for (k, g) in c.gates.iter().enumerate() {
            if deadline.is_some_and(|d| Instant::now() >= d) {
                self.restore_layout()?;
                return Err(Error::Timeout);
            }
            self.apply_gate_unrestored(g)?;
            if next.next_if(|&&w| w == k + 1).is_some() {
                self.restore_layout()?;
                observe(k + 1, self);
            }
        }
        self.restore_layout()?;
        Ok(self.stats.clone())
    }

    /// Coefficient of the basis state whose `k`-th entry is the bit of qubit
    /// `k`.
    pub fn amplitude(&self, bits: &[u8]) -> C64 {
        assert_eq!(bits.len(), self.n, "bitstring length");
        let mut v = vec![C64::new(1.0, 0.0)];
        for (site, &bit) in self.sites.iter().zip(bits) {
            let i = usize::from(bit != 0);
            let mut next = vec![ZERO; site.right];
            for (a, &x) in v.iter().enumerate() {
                for (b, slot) in next.iter_mut().enumerate() {
                    *slot += x * site.at(a, i, b);
                }
            }
            v = next;
        }
        v[0]
    }

    /// Amplitude of dense basis index `sum_q bit(q) 2^q`.
    pub fn amplitude_of_index(&self, index: usize) -> C64 {
        let bits: Vec<u8> = (0..self.n).map(|q| ((index >> q) & 1) as u8).collect();
        self.amplitude(&bits)
    }

    /// Full contraction into a dense vector indexed by `sum_q bit(q) 2^q`.
    pub fn to_statevector(&self) -> Result<Vec<C64>> {
        if self.n > STATEVECTOR_MAX_QUBITS {
            return Err(Error::TooWide { width: self.n, limit: STATEVECTOR_MAX_QUBITS });
        }
        Ok(self.contract_prefix(self.n))
    }

    /// Exact marginal distribution of qubits `0..k`, indexed by
    /// `sum_q bit(q) 2^q`. The sites right of the cut are right-canonical,
    /// so each prefix probability is the squared norm of its open bond vector.
    pub fn prefix_probabilities(&self, k: usize) -> Result<Vec<f64>> {
        if k > STATEVECTOR_MAX_QUBITS || k > self.n {
            return Err(Error::TooWide { width: k, limit: STATEVECTOR_MAX_QUBITS.min(self.n) });
        }
        let chi = if k == 0 { 1 } else { self.sites[k - 1].right };
        let cur = self.contract_prefix(k);
        Ok(cur.chunks(chi).map(|row| row.iter().map(|z| z.norm_sqr()).sum()).collect())
    }

    /// Contracts sites `0..k` into `cur[idx * chi + b]`, `b` the open bond.
    fn contract_prefix(&self, k: usize) -> Vec<C64> {
        let mut cur = vec![C64::new(1.0, 0.0)];
        let mut prefix = 1usize;
        for site in &self.sites[..k] {
            let mut next = vec![ZERO; 2 * prefix * site.right];
            for i in 0..2 {
                for idx in 0..prefix {
                    let out = idx + i * prefix;
                    for a in 0..site.left {
                        let x = cur[idx * site.left + a];
                        if x == ZERO {
                            continue;
                        }
                        for b in 0..site.right {
                            next[out * site.right + b] += x * site.at(a, i, b);
                        }
                    }
                }
            }
            cur = next;
            prefix *= 2;
        }
        cur
    }

    /// `<psi|psi>` by contracting transfer matrices along the chain.
    pub fn norm_sqr(&self) -> f64 {
        let mut env = DMatrix::from_element(1, 1, C64::new(1.0, 0.0));
        for site in &self.sites {
            let mut next = DMatrix::from_element(site.right, site.right, ZERO);
            for i in 0..2 {
                let bi = DMatrix::from_fn(site.left, site.right, |a, b| site.at(a, i, b));
                next += bi.adjoint() * &env * &bi;
            }
            env = next;
        }
        env[(0, 0)].re
    }

    /// Draws `shots` samples of `qubits` by sequential conditional sampling
    /// along the chain. Keys are bitstrings whose `k`-th character is the
    /// outcome of `qubits[k]`.
    pub fn sample(&self, qubits: &[usize], shots: usize, seed: u64) -> Histogram {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut hist = Histogram::new();
        let last = qubits.iter().copied().max().map_or(0, |m| m + 1);
        let mut bits = vec![0u8; last];
        for _ in 0..shots {
            let mut v = vec![C64::new(1.0, 0.0)];
            for (l, site) in self.sites[..last].iter().enumerate() {
                let branch = |i: usize| -> Vec<C64> {
                    (0..site.right).map(|b| v.iter().enumerate().map(|(a, x)| x * site.at(a, i, b)).sum()).collect()
                };
                let (w0, w1) = (branch(0), branch(1));
                let p0: f64 = w0.iter().map(|z| z.norm_sqr()).sum();
                let p1: f64 = w1.iter().map(|z| z.norm_sqr()).sum();
                let (bit, w, p) = if rng.gen::<f64>() * (p0 + p1) < p0 { (0, w0, p0) } else { (1, w1, p1) };
                bits[l] = bit;
                let s = p.sqrt();
                v = w.into_iter().map(|z| z / s).collect();
            }
            let key: String = qubits.iter().map(|&q| if bits[q] == 1 { '1' } else { '0' }).collect();
            *hist.entry(key).or_insert(0) += 1;
        }
        hist
    }

    /// Writes every bond's Schmidt spectrum as `bond index lambda` rows.
    pub fn write_spectra(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "bond\tindex\tlambda")?;
        for (bond, lam) in self.lambdas.iter().enumerate() {
            for (k, l) in lam.iter().enumerate() {
                writeln!(w, "{bond}\t{k}\t{l:?}")?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{qft_circuit, random_circuit};
    use crate::dense::{dense_run, DenseState};
    use std::f64::consts::FRAC_1_SQRT_2;

    fn bell() -> MpsState {
        let mut s = MpsState::new(2, TruncationPolicy::default());
        s.apply_gate(&Gate::H(0)).unwrap();
        s.apply_gate(&Gate::CX(0, 1)).unwrap();
        s
    }

    fn ghz(n: usize) -> MpsState {
        let mut s = MpsState::new(n, TruncationPolicy::default());
        s.apply_gate(&Gate::H(0)).unwrap();
        for q in 1..n {
            s.apply_gate(&Gate::CX(0, q)).unwrap();
        }
        s
    }

    fn x() -> Matrix2<C64> {
        let (o, z) = (C64::new(1.0, 0.0), ZERO);
        Matrix2::new(z, o, o, z)
    }

    #[test]
    fn initial_state() {
        let s = MpsState::new(3, TruncationPolicy::default());
        assert_eq!(s.amplitude(&[0, 0, 0]), C64::new(1.0, 0.0));
        for idx in 1..8 {
            assert_eq!(s.amplitude_of_index(idx), ZERO);
        }
        assert_eq!(s.schmidt_number(), 1);
        assert_eq!(s.bond_entropy(1), 0.0);
        assert_eq!(s.bond_entropy(2), 0.0);
        assert_eq!(MpsState::new(2, TruncationPolicy::default()).to_statevector().unwrap()[0], C64::new(1.0, 0.0));
    }

    #[test]
    fn single_qubit_gates() {
        let mut s = MpsState::new(1, TruncationPolicy::default());
        s.apply_1q(&x(), 0).unwrap();
        assert_eq!(s.amplitude(&[1]), C64::new(1.0, 0.0));

        let mut s = MpsState::new(2, TruncationPolicy::default());
        s.apply_gate(&Gate::H(1)).unwrap();
        assert!((s.amplitude(&[0, 0]).re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((s.amplitude(&[0, 1]).re - FRAC_1_SQRT_2).abs() < 1e-15);

        let mut s = MpsState::from_circuit(&random_circuit(4, 2, 9));
        let before = s.to_statevector().unwrap();
        s.apply_gate(&Gate::H(2)).unwrap();
        s.apply_gate(&Gate::H(2)).unwrap();
        let after = s.to_statevector().unwrap();
        let overlap: C64 = before.iter().zip(&after).map(|(a, b)| a.conj() * b).sum();
        assert!(overlap.norm_sqr() >= 1.0 - 1e-12);
    }

    #[test]
    fn rejects_non_unitary_and_bad_indices() {
        let mut s = MpsState::new(2, TruncationPolicy::default());
        let o = C64::new(1.0, 0.0);
        assert!(matches!(s.apply_1q(&Matrix2::new(o, o, ZERO, o), 0), Err(Error::NotUnitary(_))));
        assert!(matches!(s.apply_1q(&x(), 5), Err(Error::QubitOutOfRange { .. })));
        assert!(matches!(s.apply_2q(&swap_matrix(), 1, 1), Err(Error::DuplicateTargets(_))));
        assert!(matches!(s.apply_2q(&(swap_matrix() * C64::new(2.0, 0.0)), 0, 1), Err(Error::NotUnitary(_))));
        assert!(TruncationPolicy::new(1, 0.0).is_err());
        assert!(TruncationPolicy::new(4, 1.0).is_err());
    }

    #[test]
    fn cnot_and_bell() {
        let mut s = MpsState::new(2, TruncationPolicy::default());
        s.apply_gate(&Gate::X(0)).unwrap();
        s.apply_gate(&Gate::CX(0, 1)).unwrap();
        assert!((s.amplitude(&[1, 1]) - C64::new(1.0, 0.0)).norm() < 1e-14);

        let b = bell();
        assert!((b.bond_entropy(1) - 1.0).abs() < 1e-12);
        assert_eq!(b.amplitude(&[0, 1]), ZERO);
        let v = b.to_statevector().unwrap();
        for (k, want) in [FRAC_1_SQRT_2, 0.0, 0.0, FRAC_1_SQRT_2].iter().enumerate() {
            assert!((v[k] - C64::new(*want, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn ghz_entropies() {
        let g = ghz(4);
        for cut in 1..4 {
            assert!((g.bond_entropy(cut) - 1.0).abs() < 1e-10);
        }
        assert_eq!(g.schmidt_number(), 2);
    }

    #[test]
    fn reversed_and_distant_two_qubit_gates() {
        let mut s = MpsState::new(5, TruncationPolicy::default());
        let mut d = DenseState::zero(5).unwrap();
        for g in [Gate::H(4), Gate::CX(4, 0), Gate::CPhase(3, 1, 0.7), Gate::H(1), Gate::CX(1, 3), Gate::Swap(0, 2)] {
            s.apply_gate(&g).unwrap();
            d.apply(&g);
        }
        assert!(d.fidelity(&s.to_statevector().unwrap()) > 1.0 - 1e-12);
        assert!(s.stats.swap_count > 0);
    }

    #[test]
    fn random_two_qubit_gate_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let prep = random_circuit(10, 3, 5);
        let mut s = MpsState::new(10, TruncationPolicy::new(1024, 1e-14).unwrap());
        s.run_circuit(&prep).unwrap();
        let mut d = dense_run(&prep).unwrap();
        let u = crate::circuit::random_unitary(4, &mut rng);
        let u = Matrix4::from_iterator(u.iter().copied());
        s.apply_2q(&u, 6, 2).unwrap();
        d.apply(&Gate::Unitary2(6, 2, Box::new(u)));
        let v = s.to_statevector().unwrap();
        for (a, b) in v.iter().zip(&d.amplitudes) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn qft_of_zero_stays_product() {
        let mut s = MpsState::new(4, TruncationPolicy::default());
        let stats = s.run_circuit(&qft_circuit(4)).unwrap();
        for a in s.to_statevector().unwrap() {
            assert!((a - C64::new(0.25, 0.0)).norm() < 1e-12);
        }
        assert_eq!(stats.peak_chi, 1);
    }

    #[test]
    fn empty_circuit_is_noop() {
        let mut s = bell();
        let before = s.clone();
        s.run_circuit(&Circuit::new(2)).unwrap();
        assert_eq!(s.to_statevector().unwrap(), before.to_statevector().unwrap());
        assert!(s.run_circuit(&Circuit::new(3)).is_err());
    }

    #[test]
    fn truncation_caps_bonds() {
        let c = random_circuit(8, 6, 2);
        let mut s = MpsState::new(8, TruncationPolicy::new(4, 1e-12).unwrap());
        let stats = s.run_circuit(&c).unwrap();
        assert!(s.schmidt_number() <= 4);
        assert!(stats.discarded_weight > 0.0);
        assert!((s.norm_sqr() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn deadline_stops_the_run() {
        let c = random_circuit(6, 3, 1);
        let mut s = MpsState::new(6, TruncationPolicy::default());
        let past = Instant::now() - std::time::Duration::from_millis(1);
        assert_eq!(s.run_circuit_with(&c, Some(past), &[], |_, _| {}), Err(Error::Timeout));
    }

    #[test]
    fn gamma_reconstructs_b() {
        let s = MpsState::from_circuit(&random_circuit(5, 3, 8));
        for l in 1..5 {
            let g = s.gamma(l);
            let site = &s.sites[l];
            for a in 0..site.left {
                for k in 0..2 * site.right {
                    let idx = a * 2 * site.right + k;
                    assert!((g[idx] * s.lambdas[l - 1][a] - site.data[idx]).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn lambdas_are_normalised_and_sorted() {
        let s = MpsState::from_circuit(&random_circuit(7, 4, 3));
        for lam in &s.lambdas {
            assert!((lam.iter().map(|l| l * l).sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(lam.windows(2).all(|w| w[0] >= w[1]));
            assert!(lam.iter().all(|&l| l > 0.0));
        }
    }

    #[test]
    fn sampling() {
        let mut s = MpsState::new(2, TruncationPolicy::default());
        s.apply_gate(&Gate::X(1)).unwrap();
        assert_eq!(s.sample(&[0, 1], 20, 3)["01"], 20);

        let h = bell().sample(&[0, 1], 10_000, 5);
        assert_eq!(h.len(), 2);
        for key in ["00", "11"] {
            let f = h[key] as f64 / 1e4;
            assert!((0.45..=0.55).contains(&f));
        }
        assert_eq!(bell().sample(&[1, 0], 64, 9), bell().sample(&[1, 0], 64, 9));
    }

    #[test]
    fn spectra_dump() {
        let mut buf = Vec::new();
        bell().write_spectra(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.starts_with("bond\tindex\tlambda\n0\t0\t"));
    }

    impl MpsState {
        fn from_circuit(c: &Circuit) -> Self {
            let mut s = MpsState::new(c.width, TruncationPolicy::unbounded());
            s.run_circuit(c).unwrap();
            s
        }
    }
}
