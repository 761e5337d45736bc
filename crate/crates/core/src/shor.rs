//! End-to-end Shor factoring over either simulator backend.
//!
//! One attempt picks a base `a`; a shared factor with `N` ends the run
//! classically, otherwise the order-finding circuit is simulated, `shots`
//! counting-register values are sampled and turned into an order candidate
//! by continued fractions. Even orders with `a^(r/2) != -1 (mod N)` give the
//! factors `gcd(a^(r/2) ± 1, N)`.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{shor_order_circuit, Circuit};
use crate::dense::DenseState;
use crate::error::{Error, Result};
use crate::mps::{GateStats, MpsState, TruncationPolicy};
use crate::numthy::{bit_length, extract_order, gcd, mod_pow, preselect_base, SemiprimeSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Preselected,
    Random,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Preselected => "preselected",
            Mode::Random => "random",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "preselected" => Ok(Mode::Preselected),
            "random" => Ok(Mode::Random),
            _ => Err(Error::InvalidArgument(format!("unknown mode {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Mps,
    Dense,
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Backend::Mps => "mps",
            Backend::Dense => "dense",
        })
    }
}

impl FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mps" => Ok(Backend::Mps),
            "dense" => Ok(Backend::Dense),
            _ => Err(Error::InvalidArgument(format!("unknown backend {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub mode: Mode,
    pub shots: usize,
    /// Attempts before giving up with [`Status::Exhausted`].
    pub max_attempts: usize,
    pub backend: Backend,
    pub truncation: TruncationPolicy,
    pub seed: u64,
    pub timeout: Duration,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Preselected,
            shots: 8,
            max_attempts: 16,
            backend: Backend::Mps,
            truncation: TruncationPolicy::default(),
            seed: 0,
            timeout: Duration::from_secs(10_000),
        }
    }
}

impl RunConfig {
    fn validate(&self) -> Result<()> {
        if self.shots == 0 || self.max_attempts == 0 || self.timeout.is_zero() {
            return Err(Error::InvalidArgument("shots, max_attempts and timeout must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttemptPath {
    GcdShortcut,
    Quantum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rejection {
    /// No shot produced a verified order.
    NoOrderExtracted,
    OddOrder,
    /// `a^(r/2) = -1 (mod N)`.
    TrivialSquareRoot,
    /// Both `gcd(a^(r/2) ± 1, N)` were 1 or `N`.
    TrivialFactors,
    Timeout,
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rejection::NoOrderExtracted => "no order extracted",
            Rejection::OddOrder => "odd order",
            Rejection::TrivialSquareRoot => "a^(r/2) = -1 mod N",
            Rejection::TrivialFactors => "trivial factors",
            Rejection::Timeout => "timeout",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttemptRecord {
    pub a: u64,
    pub path: AttemptPath,
    /// Counting-register values, one per shot, in sampling order.
    pub measured: Vec<u64>,
    pub order: Option<u64>,
    pub rejection: Option<Rejection>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Success,
    Timeout,
    Exhausted,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Success => "success",
            Status::Timeout => "timeout",
            Status::Exhausted => "exhausted",
        })
    }
}

/// Wall-clock seconds per phase, summed over attempts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimings {
    pub circuit_build: f64,
    pub simulation: f64,
    pub sampling: f64,
    pub postprocess: f64,
}

impl PhaseTimings {
    fn add(&mut self, other: &PhaseTimings) {
        self.circuit_build += other.circuit_build;
        self.simulation += other.simulation;
        self.sampling += other.sampling;
        self.postprocess += other.postprocess;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorizationOutcome {
    pub n: u64,
    pub mode: Mode,
    pub backend: Backend,
    pub shots: usize,
    pub seed: u64,
    /// Counting qubits `t = 2 bitlen(N)`.
    pub counting_qubits: u32,
    pub attempts: Vec<AttemptRecord>,
    /// `(p, q)` with `p <= q` and `p q = N`.
    pub factors: Option<(u64, u64)>,
    pub status: Status,
    pub timings: PhaseTimings,
    /// Simulator counters summed over quantum attempts (peak is the max).
    pub stats: GateStats,
}

impl FactorizationOutcome {
    /// Copy with every wall-clock field zeroed, for replay comparisons.
    pub fn without_timings(&self) -> Self {
        Self { timings: PhaseTimings::default(), ..self.clone() }
    }

    /// Base used by the last attempt.
    pub fn last_base(&self) -> Option<u64> {
        self.attempts.last().map(|a| a.a)
    }
}

/// Counting-register histogram from one period-finding run.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodFinding {
    pub counting_qubits: u32,
    pub counts: BTreeMap<u64, usize>,
    /// Values in sampling order.
    pub shots: Vec<u64>,
    pub timings: PhaseTimings,
    pub stats: GateStats,
}

/// Picks the base for one attempt.
pub fn choose_base(n: &SemiprimeSpec, mode: Mode, rng: &mut impl Rng) -> u64 {
    match mode {
        Mode::Preselected => preselect_base(n),
        Mode::Random => rng.gen_range(2..=n.value - 2),
    }
}

pub fn counting_qubits(n: u64) -> u32 {
    2 * bit_length(n)
}

fn register_value(bits: &str) -> u64 {
    bits.bytes().enumerate().filter(|(_, b)| *b == b'1').map(|(k, _)| 1u64 << k).sum()
}

fn run_dense(c: &Circuit, deadline: Option<Instant>) -> Result<DenseState> {
    let mut s = DenseState::zero(c.width)?;
    for g in &c.gates {
        if deadline.is_some_and(|d| Instant::now() >= d) {
            return Err(Error::Timeout);
        }
        s.apply(g);
    }
    Ok(s)
}

/// Builds and simulates the order-finding circuit for `a` mod `n`, then
/// samples `config.shots` counting-register values with `sample_seed`.
pub fn run_period_finding(
    n: u64,
    a: u64,
    config: &RunConfig,
    sample_seed: u64,
    deadline: Option<Instant>,
) -> Result<PeriodFinding> {
    let mut timings = PhaseTimings::default();
    let clock = Instant::now();
    let circuit = shor_order_circuit(n, a)?;
    timings.circuit_build = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let (samples, stats) = match config.backend {
        Backend::Mps => {
            let mut state = MpsState::new(circuit.width, config.truncation);
            let stats = state.run_circuit_with(&circuit, deadline, &[], |_, _| {})?;
            timings.simulation = clock.elapsed().as_secs_f64();
            let clock = Instant::now();
            let hist = state.sample(&circuit.measured, config.shots, sample_seed);
            timings.sampling = clock.elapsed().as_secs_f64();
            (hist, stats)
        }
        Backend::Dense => {
            let state = run_dense(&circuit, deadline)?;
            timings.simulation = clock.elapsed().as_secs_f64();
            let clock = Instant::now();
            let hist = crate::dense::dense_sample(&state, &circuit.measured, config.shots, sample_seed);
            timings.sampling = clock.elapsed().as_secs_f64();
            let stats = GateStats { gates: circuit.gates.len(), peak_chi: 0, ..GateStats::default() };
            (hist, stats)
        }
    };

    // Histograms come back sorted by bitstring; expand them in that order so
    // the shot list is a deterministic function of the seed.
    let mut counts = BTreeMap::new();
    let mut shots = Vec::with_capacity(config.shots);
    for (bits, &k) in &samples {
        let y = register_value(bits);
        *counts.entry(y).or_insert(0) += k;
        shots.extend(std::iter::repeat_n(y, k));
    }
    Ok(PeriodFinding { counting_qubits: counting_qubits(n), counts, shots, timings, stats })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PostProcessed {
    pub order: Option<u64>,
    pub factors: Option<(u64, u64)>,
    pub rejection: Option<Rejection>,
}

/// Smallest verified order over the distinct measured values, and the
/// factors it yields when it passes the even-order and square-root checks.
pub fn postprocess(counts: &BTreeMap<u64, usize>, a: u64, n: u64, t: u32) -> PostProcessed {
    let order = counts.keys().filter_map(|&y| extract_order(y, t, a, n)).min();
    let Some(r) = order else {
        return PostProcessed { order: None, factors: None, rejection: Some(Rejection::NoOrderExtracted) };
    };
    if r % 2 == 1 {
        return PostProcessed { order, factors: None, rejection: Some(Rejection::OddOrder) };
    }
    let half = mod_pow(a, r / 2, n);
    if half == n - 1 {
        return PostProcessed { order, factors: None, rejection: Some(Rejection::TrivialSquareRoot) };
    }
    let nontrivial = [gcd(half + n - 1, n), gcd(half + 1, n)].into_iter().find(|&g| g > 1 && g < n);
    match nontrivial {
        Some(p) => {
            let (p, q) = (p.min(n / p), p.max(n / p));
            PostProcessed { order, factors: Some((p, q)), rejection: None }
        }
        None => PostProcessed { order, factors: None, rejection: Some(Rejection::TrivialFactors) },
    }
}

/// Record, factors found, phase timings and simulator counters of one attempt.
pub type AttemptResult = (AttemptRecord, Option<(u64, u64)>, PhaseTimings, GateStats);

/// Runs one attempt with base `a`.
pub fn attempt_with_base(
    n: u64,
    a: u64,
    config: &RunConfig,
    sample_seed: u64,
    deadline: Option<Instant>,
) -> Result<AttemptResult> {
    let g = gcd(a, n);
    if g > 1 {
        let (p, q) = (g.min(n / g), g.max(n / g));
        let record =
            AttemptRecord { a, path: AttemptPath::GcdShortcut, measured: vec![], order: None, rejection: None };
        return Ok((record, Some((p, q)), PhaseTimings::default(), GateStats::default()));
    }
    let pf = match run_period_finding(n, a, config, sample_seed, deadline) {
        Err(Error::Timeout) => {
            let record = AttemptRecord {
                a,
                path: AttemptPath::Quantum,
                measured: vec![],
                order: None,
                rejection: Some(Rejection::Timeout),
            };
            return Ok((record, None, PhaseTimings::default(), GateStats::default()));
        }
        other => other?,
    };
    let clock = Instant::now();
    let pp = postprocess(&pf.counts, a, n, pf.counting_qubits);
    let mut timings = pf.timings;
    timings.postprocess = clock.elapsed().as_secs_f64();
    let record =
        AttemptRecord { a, path: AttemptPath::Quantum, measured: pf.shots, order: pp.order, rejection: pp.rejection };
    Ok((record, pp.factors, timings, pf.stats))
}

/// Factors the odd square-free semiprime `n`.
pub fn factor(n: u64, config: &RunConfig) -> Result<FactorizationOutcome> {
    config.validate()?;
    let spec = SemiprimeSpec::new(n)?;
    let deadline = Instant::now().checked_add(config.timeout);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut outcome = FactorizationOutcome {
        n,
        mode: config.mode,
        backend: config.backend,
        shots: config.shots,
        seed: config.seed,
        counting_qubits: counting_qubits(n),
        attempts: Vec::new(),
        factors: None,
        status: Status::Exhausted,
        timings: PhaseTimings::default(),
        stats: GateStats::default(),
    };

    for _ in 0..config.max_attempts {
        if deadline.is_some_and(|d| Instant::now() >= d) {
            outcome.status = Status::Timeout;
            break;
        }
        let a = choose_base(&spec, config.mode, &mut rng);
        let sample_seed = rng.gen::<u64>();
        let (record, factors, timings, stats) = attempt_with_base(n, a, config, sample_seed, deadline)?;
        outcome.timings.add(&timings);
        outcome.stats.gates += stats.gates;
        outcome.stats.swap_count += stats.swap_count;
        outcome.stats.svd_count += stats.svd_count;
        outcome.stats.discarded_weight += stats.discarded_weight;
        outcome.stats.peak_chi = outcome.stats.peak_chi.max(stats.peak_chi);
        let rejection = record.rejection;
        outcome.attempts.push(record);

        if let Some((p, q)) = factors {
            assert_eq!(p * q, n, "factors must multiply back to N");
            outcome.factors = Some((p, q));
            outcome.status = Status::Success;
            break;
        }
        match (config.mode, rejection) {
            (_, Some(Rejection::Timeout)) => {
                outcome.status = Status::Timeout;
                break;
            }
            (Mode::Preselected, Some(r @ (Rejection::OddOrder | Rejection::TrivialSquareRoot))) => {
                return Err(Error::PreselectionBreach { a, n, reason: r.to_string() });
            }
            _ => {}
        }
    }
    Ok(outcome)
}

/// Writes one JSON object per line.
pub fn write_outcomes_jsonl<'a>(
    mut w: impl Write,
    outcomes: impl IntoIterator<Item = &'a FactorizationOutcome>,
) -> Result<()> {
    for o in outcomes {
        serde_json::to_writer(&mut w, o)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_outcomes_jsonl(r: impl BufRead) -> Result<Vec<FactorizationOutcome>> {
    let mut out = Vec::new();
    for line in r.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numthy::multiplicative_order;

    #[test]
    fn base_choice() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s15 = SemiprimeSpec::new(15).unwrap();
        assert_eq!(choose_base(&s15, Mode::Preselected, &mut rng), 4);
        assert_eq!(choose_base(&SemiprimeSpec::new(9997).unwrap(), Mode::Preselected, &mut rng), 768);
        let draw = |seed| choose_base(&s15, Mode::Random, &mut ChaCha8Rng::seed_from_u64(seed));
        assert_eq!(draw(5), draw(5));
        for seed in 0..200 {
            assert!((2..=13).contains(&draw(seed)));
        }
    }

    #[test]
    fn postprocess_examples() {
        let counts = BTreeMap::from([(0, 3), (128, 5)]);
        let pp = postprocess(&counts, 4, 15, 8);
        assert_eq!(pp.order, Some(2));
        assert_eq!(pp.factors, Some((3, 5)));

        let pp = postprocess(&BTreeMap::from([(0, 8)]), 4, 15, 8);
        assert_eq!(pp, PostProcessed { order: None, factors: None, rejection: Some(Rejection::NoOrderExtracted) });

        // 16 has order 3 mod 21; y = 2^10 / 3 rounded
        assert_eq!(multiplicative_order(16, 21).unwrap(), 3);
        let pp = postprocess(&BTreeMap::from([(341, 1)]), 16, 21, 10);
        assert_eq!(pp.order, Some(3));
        assert_eq!(pp.rejection, Some(Rejection::OddOrder));
        assert_eq!(Rejection::OddOrder.to_string(), "odd order");

        // 14 = -1 mod 15 has order 2 and a^(r/2) = -1
        let pp = postprocess(&BTreeMap::from([(128, 1)]), 14, 15, 8);
        assert_eq!(pp.rejection, Some(Rejection::TrivialSquareRoot));
    }

    #[test]
    fn gcd_shortcut_needs_no_simulation() {
        let s15 = SemiprimeSpec::new(15).unwrap();
        let seed = (0..1000u64)
            .find(|&s| choose_base(&s15, Mode::Random, &mut ChaCha8Rng::seed_from_u64(s)) == 6)
            .expect("some seed draws 6 first");
        let cfg = RunConfig { mode: Mode::Random, seed, ..RunConfig::default() };
        let out = factor(15, &cfg).unwrap();
        assert_eq!(out.status, Status::Success);
        assert_eq!(out.factors, Some((3, 5)));
        assert_eq!(out.attempts.len(), 1);
        assert_eq!(out.attempts[0].path, AttemptPath::GcdShortcut);
        assert_eq!(out.stats.gates, 0);
    }

    #[test]
    fn invalid_inputs() {
        assert!(matches!(factor(16, &RunConfig::default()), Err(Error::NotSemiprime(16))));
        assert!(matches!(factor(25, &RunConfig::default()), Err(Error::NotSemiprime(25))));
        let cfg = RunConfig { shots: 0, ..RunConfig::default() };
        assert!(factor(15, &cfg).is_err());
    }

    #[test]
    fn register_values_are_little_endian() {
        assert_eq!(register_value("00000001"), 128);
        assert_eq!(register_value("10000000"), 1);
        assert_eq!(register_value("0000"), 0);
    }

    #[test]
    fn timeout_is_reported() {
        let cfg = RunConfig { timeout: Duration::from_nanos(1), ..RunConfig::default() };
        let out = factor(15, &cfg).unwrap();
        assert_eq!(out.status, Status::Timeout);
        assert!(out.factors.is_none());
    }

    #[test]
    fn mode_and_backend_names() {
        for m in [Mode::Preselected, Mode::Random] {
            assert_eq!(m.to_string().parse::<Mode>().unwrap(), m);
        }
        for b in [Backend::Mps, Backend::Dense] {
            assert_eq!(b.to_string().parse::<Backend>().unwrap(), b);
        }
        assert!("fast".parse::<Backend>().is_err());
    }
}
