//! Dense statevector reference simulator.
//!
//! Deliberately plain: every gate is applied by index arithmetic on the full
//! amplitude vector. It exists to cross-check the MPS engine and the circuit
//! builders on small widths.

use faer::Mat;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::circuit::{Circuit, Gate};
use crate::error::{Error, Result};
use crate::{Histogram, C64};

/// 2^24 complex doubles = 256 MiB is the most we allow.
pub const DENSE_MAX_QUBITS: usize = 24;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseState {
    pub n: usize,
    pub amplitudes: Vec<C64>,
}

/// Spreads the bits of `i` over the positions not in `sorted_holes`.
fn insert_zero_bits(mut i: usize, sorted_holes: &[usize]) -> usize {
    for &h in sorted_holes {
        let low = i & ((1 << h) - 1);
        i = ((i >> h) << (h + 1)) | low;
    }
    i
}

impl DenseState {
    pub fn zero(n: usize) -> Result<Self> {
        if n > DENSE_MAX_QUBITS {
            return Err(Error::TooWide { width: n, limit: DENSE_MAX_QUBITS });
        }
        let mut amplitudes = vec![C64::new(0.0, 0.0); 1 << n];
        amplitudes[0] = C64::new(1.0, 0.0);
        Ok(Self { n, amplitudes })
    }

    pub fn basis(n: usize, index: usize) -> Result<Self> {
        let mut s = Self::zero(n)?;
        s.amplitudes[0] = C64::new(0.0, 0.0);
        s.amplitudes[index] = C64::new(1.0, 0.0);
        Ok(s)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Applies `m` (dimension `2^k`) to `qubits`, the first qubit being the
    /// most significant index of `m`.
    pub fn apply_matrix(&mut self, qubits: &[usize], m: &DMatrix<C64>) {
        let k = qubits.len();
        let dim = 1usize << k;
        assert_eq!(m.nrows(), dim);
        let mut holes = qubits.to_vec();
        holes.sort_unstable();
        let offsets: Vec<usize> = (0..dim)
            .map(|r| {
                qubits.iter().enumerate().filter(|(j, _)| (r >> (k - 1 - j)) & 1 == 1).map(|(_, &q)| 1usize << q).sum()
            })
            .collect();
        let mut buf = vec![C64::new(0.0, 0.0); dim];
        for i in 0..(1usize << (self.n - k)) {
            let base = insert_zero_bits(i, &holes);
            for (r, slot) in buf.iter_mut().enumerate() {
                *slot = self.amplitudes[base + offsets[r]];
            }
            for r in 0..dim {
                let mut acc = C64::new(0.0, 0.0);
                for (col, v) in buf.iter().enumerate() {
                    acc += m[(r, col)] * v;
                }
                self.amplitudes[base + offsets[r]] = acc;
            }
        }
    }

    pub fn apply(&mut self, gate: &Gate) {
        match *gate {
            // diagonal gates only rescale the amplitudes with every listed bit set
            Gate::Phase(q, t) => self.apply_phase(1 << q, t),
            Gate::CPhase(a, b, t) => self.apply_phase((1 << a) | (1 << b), t),
            _ => self.apply_matrix(&gate.qubits(), &gate.matrix()),
        }
    }

    fn apply_phase(&mut self, mask: usize, theta: f64) {
        let ph = C64::from_polar(1.0, theta);
        for (idx, amp) in self.amplitudes.iter_mut().enumerate() {
            if idx & mask == mask {
                *amp *= ph;
            }
        }
    }

    /// `|<self|other>|^2`.
    pub fn fidelity(&self, other: &[C64]) -> f64 {
        self.amplitudes.iter().zip(other).map(|(a, b)| a.conj() * b).sum::<C64>().norm_sqr()
    }
}

/// Runs `c` from `|0...0>`.
pub fn dense_run(c: &Circuit) -> Result<DenseState> {
    let mut s = DenseState::zero(c.width)?;
    for g in &c.gates {
        s.apply(g);
    }
    Ok(s)
}

/// Von Neumann entropy (bits) of the reduced state on `subset`, from the
/// singular values of the amplitudes reshaped across the bipartition.
pub fn dense_entropy(state: &DenseState, subset: &[usize]) -> Result<f64> {
    let n = state.n;
    let mut sorted = subset.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.is_empty() || sorted.len() >= n || sorted.len() != subset.len() || sorted[sorted.len() - 1] >= n {
        return Err(Error::InvalidArgument(format!("{subset:?} is not a proper subset of {n} qubits")));
    }
    let complement: Vec<usize> = (0..n).filter(|q| sorted.binary_search(q).is_err()).collect();
    let (da, db) = (1usize << subset.len(), 1usize << complement.len());
    let spread = |bits: usize, qs: &[usize]| -> usize {
        qs.iter().enumerate().filter(|(k, _)| (bits >> k) & 1 == 1).map(|(_, &q)| 1usize << q).sum()
    };
    let a_off: Vec<usize> = (0..da).map(|i| spread(i, subset)).collect();
    let b_off: Vec<usize> = (0..db).map(|j| spread(j, &complement)).collect();
    let psi = Mat::<C64>::from_fn(da, db, |i, j| state.amplitudes[a_off[i] + b_off[j]]);
    let sv = psi.singular_values().map_err(|e| Error::Decomposition(format!("{e:?}")))?;
    Ok(sv.iter().map(|s| s * s).filter(|&p| p > 1e-300).map(|p| -p * p.log2()).sum::<f64>().max(0.0))
}

/// Samples `shots` outcomes of `qubits` from exact probabilities. Keys are
/// bitstrings whose `k`-th character is the value of `qubits[k]`.
pub fn dense_sample(state: &DenseState, qubits: &[usize], shots: usize, seed: u64) -> Histogram {
    let k = qubits.len();
    let mut probs = vec![0.0f64; 1 << k];
    for (idx, amp) in state.amplitudes.iter().enumerate() {
        let outcome = qubits.iter().enumerate().fold(0usize, |acc, (j, &q)| acc | (((idx >> q) & 1) << j));
        probs[outcome] += amp.norm_sqr();
    }
    let mut cumulative = Vec::with_capacity(probs.len());
    let mut total = 0.0;
    for p in &probs {
        total += p;
        cumulative.push(total);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hist = Histogram::new();
    for _ in 0..shots {
        let u = rng.gen::<f64>() * total;
        let outcome = cumulative.partition_point(|&c| c <= u).min(probs.len() - 1);
        let key: String = (0..k).map(|j| if (outcome >> j) & 1 == 1 { '1' } else { '0' }).collect();
        *hist.entry(key).or_insert(0) += 1;
    }
    hist
}
