//! Benchmark harness: factoring sweeps, counting-register histograms and
//! register-ordering entropy reports, with CSV and JSON-lines emitters.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{BufRead, Read, Write};
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{reorder_registers, shor_order_circuit, RegisterOrdering};
use crate::dense::{dense_run, dense_sample};
use crate::error::{Error, Result};
use crate::mps::{MpsState, TruncationPolicy};
use crate::numthy::{bit_length, multiplicative_order};
use crate::shor::{counting_qubits, factor, Backend, Mode, RunConfig, Status};

/// One factoring run of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    #[serde(rename = "N")]
    pub n: u64,
    pub bit_length: u32,
    pub mode: Mode,
    pub backend: Backend,
    /// Base of the last attempt; empty when no attempt was made.
    pub a_used: Option<u64>,
    pub attempts: usize,
    pub shots: usize,
    pub status: Status,
    pub p: Option<u64>,
    pub q: Option<u64>,
    pub circuit_build_seconds: f64,
    pub simulation_seconds: f64,
    pub sampling_seconds: f64,
    pub postprocess_seconds: f64,
    /// Largest MPS bond dimension over the run, 1 when no MPS simulation ran.
    pub peak_chi: usize,
    pub swap_count: usize,
    /// Seconds since the Unix epoch when the run finished.
    pub timestamp: u64,
    pub seed: u64,
    /// Error text for runs that stopped on an error rather than a status.
    pub error: Option<String>,
}

impl BenchRecord {
    /// Copy with durations and the timestamp zeroed.
    pub fn without_timings(&self) -> Self {
        Self {
            circuit_build_seconds: 0.0,
            simulation_seconds: 0.0,
            sampling_seconds: 0.0,
            postprocess_seconds: 0.0,
            timestamp: 0,
            ..self.clone()
        }
    }
}

fn now_epoch_seconds() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn bench_one(n: u64, mode: Mode, config: &RunConfig) -> BenchRecord {
    let config = RunConfig { mode, ..config.clone() };
    let mut record = BenchRecord {
        n,
        bit_length: bit_length(n),
        mode,
        backend: config.backend,
        a_used: None,
        attempts: 0,
        shots: config.shots,
        status: Status::Exhausted,
        p: None,
        q: None,
        circuit_build_seconds: 0.0,
        simulation_seconds: 0.0,
        sampling_seconds: 0.0,
        postprocess_seconds: 0.0,
        peak_chi: 1,
        swap_count: 0,
        timestamp: 0,
        seed: config.seed,
        error: None,
    };
    match factor(n, &config) {
        Ok(out) => {
            record.a_used = out.last_base();
            record.attempts = out.attempts.len();
            record.status = out.status;
            record.p = out.factors.map(|f| f.0);
            record.q = out.factors.map(|f| f.1);
            record.circuit_build_seconds = out.timings.circuit_build;
            record.simulation_seconds = out.timings.simulation;
            record.sampling_seconds = out.timings.sampling;
            record.postprocess_seconds = out.timings.postprocess;
            record.peak_chi = out.stats.peak_chi.max(1);
            record.swap_count = out.stats.swap_count;
        }
        Err(e) => record.error = Some(e.to_string()),
    }
    record.timestamp = now_epoch_seconds();
    record
}

/// Factors every target once per mode on a pool of `workers` threads (0 for
/// the available parallelism). Records come back in target-major order,
/// then in the order of `modes`, whatever order the runs finish in.
pub fn bench_sweep(targets: &[u64], modes: &[Mode], config: &RunConfig, workers: usize) -> Result<Vec<BenchRecord>> {
    if targets.is_empty() || modes.is_empty() {
        return Err(Error::InvalidArgument("a sweep needs at least one target and one mode".into()));
    }
    let jobs: Vec<(u64, Mode)> = targets.iter().flat_map(|&n| modes.iter().map(move |&m| (n, m))).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("worker pool: {e}")))?;
    Ok(pool.install(|| jobs.par_iter().map(|&(n, m)| bench_one(n, m, config)).collect()))
}

pub fn write_records_csv(w: impl Write, records: &[BenchRecord]) -> Result<()> {
    let mut writer = csv::Writer::from_writer(w);
    for r in records {
        writer.serialize(r)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_records_csv(r: impl Read) -> Result<Vec<BenchRecord>> {
    let mut reader = csv::Reader::from_reader(r);
    reader.deserialize().map(|row| row.map_err(Error::from)).collect()
}

pub fn write_records_jsonl(w: impl Write, records: &[BenchRecord]) -> Result<()> {
    write_jsonl(w, records)
}

pub fn read_records_jsonl(r: impl BufRead) -> Result<Vec<BenchRecord>> {
    let mut out = Vec::new();
    for line in r.lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}

/// Sampled counting-register values next to the ideal peak positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramReport {
    #[serde(rename = "N")]
    pub n: u64,
    pub a: u64,
    pub counting_qubits: u32,
    pub shots: usize,
    pub order: u64,
    /// Counts keyed by register value.
    pub counts: BTreeMap<u64, usize>,
    /// `k 2^t / r` for `k = 0 .. r`.
    pub expected_peaks: Vec<f64>,
    /// Exact probability of a register value within 1 of an expected peak.
    pub noiseless_mass_near_peaks: f64,
}

/// Distance from `y` to the nearest of `peaks` on the cycle of length `m`.
fn peak_distance(peaks: &[f64], m: f64, y: f64) -> (usize, f64) {
    peaks
        .iter()
        .map(|p| {
            let d = (p - y).abs();
            d.min(m - d)
        })
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap_or((0, f64::INFINITY))
}

impl HistogramReport {
    fn modulus(&self) -> f64 {
        2f64.powi(self.counting_qubits as i32)
    }

    /// Index of the nearest expected peak and its distance from `y`, counted
    /// modulo `2^t`.
    pub fn nearest_peak(&self, y: u64) -> (usize, f64) {
        peak_distance(&self.expected_peaks, self.modulus(), y as f64)
    }

    /// Share of the shots within `radius` of some expected peak.
    pub fn mass_near_peaks(&self, radius: f64) -> f64 {
        let near: usize = self.counts.iter().filter(|(&y, _)| self.nearest_peak(y).1 <= radius).map(|(_, &c)| c).sum();
        near as f64 / self.shots.max(1) as f64
    }

    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "N = {}, a = {}, r = {}, t = {}, shots = {}, exact mass within 1 of a peak = {:.4}",
            self.n, self.a, self.order, self.counting_qubits, self.shots, self.noiseless_mass_near_peaks
        );
        let _ = writeln!(out, "{:>10} {:>8} {:>10} {:>14}", "value", "count", "fraction", "nearest peak");
        for (&y, &c) in &self.counts {
            let (k, _) = self.nearest_peak(y);
            let _ = writeln!(
                out,
                "{:>10} {:>8} {:>10.4} {:>14.2}",
                y,
                c,
                c as f64 / self.shots.max(1) as f64,
                self.expected_peaks[k]
            );
        }
        out
    }
}

fn register_value(bits: &str) -> u64 {
    bits.bytes().enumerate().filter(|(_, b)| *b == b'1').map(|(k, _)| 1u64 << k).sum()
}

/// Simulates the order-finding circuit for `a` mod `n` once, samples
/// `shots` counting-register values and evaluates the exact counting-register
/// distribution against the peaks `k 2^t / r`.
pub fn histogram_report(
    n: u64,
    a: u64,
    shots: usize,
    backend: Backend,
    truncation: TruncationPolicy,
    seed: u64,
) -> Result<HistogramReport> {
    let order = multiplicative_order(a, n)?;
    let circuit = shor_order_circuit(n, a)?;
    let t = counting_qubits(n);
    // the counting register occupies qubits 0..t in the builder's layout
    let upper_mask = (1usize << t) - 1;
    let (hist, marginal) = match backend {
        Backend::Mps => {
            let mut state = MpsState::new(circuit.width, truncation);
            state.run_circuit(&circuit)?;
            (state.sample(&circuit.measured, shots, seed), state.prefix_probabilities(t as usize)?)
        }
        Backend::Dense => {
            let state = dense_run(&circuit)?;
            let mut marginal = vec![0.0; upper_mask + 1];
            for (idx, amp) in state.amplitudes.iter().enumerate() {
                marginal[idx & upper_mask] += amp.norm_sqr();
            }
            (dense_sample(&state, &circuit.measured, shots, seed), marginal)
        }
    };
    let m = 2f64.powi(t as i32);
    let expected_peaks: Vec<f64> = (0..order).map(|k| k as f64 * m / order as f64).collect();
    let noiseless_mass_near_peaks = marginal
        .iter()
        .enumerate()
        .filter(|(y, _)| peak_distance(&expected_peaks, m, *y as f64).1 <= 1.0)
        .map(|(_, p)| p)
        .sum();
    let mut counts = BTreeMap::new();
    for (bits, &c) in &hist {
        *counts.entry(register_value(bits)).or_insert(0) += c;
    }
    Ok(HistogramReport { n, a, counting_qubits: t, shots, order, counts, expected_peaks, noiseless_mass_near_peaks })
}

/// Bond entropy at one register-boundary cut at one checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyRow {
    pub checkpoint: String,
    /// Registers on either side, e.g. `Upper|Lower+Ancilla`.
    pub boundary: String,
    /// Qubits to the left of the cut.
    pub cut: usize,
    pub entropy_bits: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    #[serde(rename = "N")]
    pub n: u64,
    pub a: u64,
    pub ordering: RegisterOrdering,
    pub width: usize,
    pub rows: Vec<EntropyRow>,
    /// Mean entropy per boundary over all checkpoints.
    pub averages: Vec<(String, f64)>,
    pub peak_chi: usize,
}

impl EntropyReport {
    pub fn rows_within_bounds(&self, tolerance: f64) -> bool {
        self.rows.iter().all(|r| {
            let bound = r.cut.min(self.width - r.cut) as f64;
            r.entropy_bits >= -tolerance && r.entropy_bits <= bound + tolerance
        })
    }
}

/// Simulates the order-finding circuit for `a` mod `n` in each register
/// ordering and records the entropy at both register boundaries after every
/// marked block: the initial state, state preparation, each controlled
/// multiplier and the inverse transform.
pub fn entropy_report(
    n: u64,
    a: u64,
    orderings: &[RegisterOrdering],
    policy: TruncationPolicy,
) -> Result<Vec<EntropyReport>> {
    let base = shor_order_circuit(n, a)?;
    orderings.iter().map(|&ordering| entropy_for_ordering(n, a, &base, ordering, policy)).collect()
}

fn entropy_for_ordering(
    n: u64,
    a: u64,
    base: &crate::circuit::Circuit,
    ordering: RegisterOrdering,
    policy: TruncationPolicy,
) -> Result<EntropyReport> {
    let circuit = reorder_registers(base, ordering);
    let cuts = circuit.layout.as_ref().map(|l| l.boundary_cuts()).unwrap_or_default();
    let mut rows = Vec::new();
    let record = |label: &str, state: &MpsState, rows: &mut Vec<EntropyRow>| {
        for (boundary, cut) in &cuts {
            rows.push(EntropyRow {
                checkpoint: label.to_string(),
                boundary: boundary.clone(),
                cut: *cut,
                entropy_bits: state.bond_entropy(*cut),
            });
        }
    };

    let mut state = MpsState::new(circuit.width, policy);
    let markers = &circuit.markers;
    let checkpoints: Vec<usize> = markers.iter().map(|m| m.position).collect();
    state.run_circuit_with(&circuit, None, &checkpoints, |k, s| {
        for m in markers.iter().filter(|m| m.position == k) {
            record(&m.label, s, &mut rows);
        }
    })?;

    let averages = cuts
        .iter()
        .map(|(boundary, _)| {
            let vals: Vec<f64> = rows.iter().filter(|r| &r.boundary == boundary).map(|r| r.entropy_bits).collect();
            (boundary.clone(), vals.iter().sum::<f64>() / vals.len().max(1) as f64)
        })
        .collect();
    Ok(EntropyReport { n, a, ordering, width: circuit.width, rows, averages, peak_chi: state.stats.peak_chi })
}

/// Writes one row per histogram bin, tagged with its nearest expected peak.
pub fn write_histogram_csv(w: impl Write, report: &HistogramReport) -> Result<()> {
    let mut writer = csv::Writer::from_writer(w);
    writer.write_record(["N", "a", "order", "value", "count", "nearest_peak"])?;
    for (&y, &c) in &report.counts {
        let peak = report.expected_peaks[report.nearest_peak(y).0];
        writer.write_record([
            report.n.to_string(),
            report.a.to_string(),
            report.order.to_string(),
            y.to_string(),
            c.to_string(),
            peak.to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// Flattens the reports to one row per (ordering, checkpoint, boundary).
pub fn write_entropy_csv(w: impl Write, reports: &[EntropyReport]) -> Result<()> {
    let mut writer = csv::Writer::from_writer(w);
    writer.write_record(["N", "a", "ordering", "checkpoint", "boundary", "cut", "entropy_bits"])?;
    for rep in reports {
        for row in &rep.rows {
            writer.write_record([
                rep.n.to_string(),
                rep.a.to_string(),
                rep.ordering.to_string(),
                row.checkpoint.clone(),
                row.boundary.clone(),
                row.cut.to_string(),
                row.entropy_bits.to_string(),
            ])?;
        }
    }
    writer.flush()?;
    Ok(())
}

/// Writes any serialisable values as JSON lines.
pub fn write_jsonl<'a, T: Serialize + 'a>(mut w: impl Write, items: impl IntoIterator<Item = &'a T>) -> Result<()> {
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}
