use std::time::Duration;

use shor_mps::bench::histogram_report;
use shor_mps::mps::TruncationPolicy;
use shor_mps::numthy::{gcd, mod_pow, multiplicative_order};
use shor_mps::shor::{
    attempt_with_base, factor, read_outcomes_jsonl, write_outcomes_jsonl, AttemptPath, Backend, Mode, Rejection,
    RunConfig, Status,
};

fn exact_config() -> RunConfig {
    RunConfig { truncation: TruncationPolicy::new(1024, 1e-12).unwrap(), ..RunConfig::default() }
}

#[test]
fn preselected_factoring_of_small_semiprimes() {
    for (n, a, p, q) in [(15u64, 4u64, 3u64, 5u64), (21, 8, 3, 7), (93, 32, 3, 31), (129, 44, 3, 43)] {
        let out = factor(n, &exact_config()).unwrap();
        assert_eq!(out.status, Status::Success, "N={n}");
        assert_eq!(out.factors, Some((p, q)));
        assert_eq!(out.attempts.len(), 1);
        let attempt = &out.attempts[0];
        assert_eq!((attempt.a, attempt.path, attempt.order), (a, AttemptPath::Quantum, Some(2)));
        assert_eq!(attempt.measured.len(), 8);
        let half = 1u64 << (out.counting_qubits - 1);
        assert!(attempt.measured.iter().all(|&y| y == 0 || y == half), "{:?}", attempt.measured);
        assert_eq!(out.stats.peak_chi, 2);
    }
}

#[test]
fn every_base_for_fifteen_matches_the_classical_classification() {
    let config = RunConfig { shots: 64, ..exact_config() };
    for a in 2..=13u64 {
        let (record, factors, _, _) = attempt_with_base(15, a, &config, 7, None).unwrap();
        if gcd(a, 15) > 1 {
            assert_eq!(record.path, AttemptPath::GcdShortcut);
            assert_eq!(factors, Some((3, 5)));
            continue;
        }
        let r = multiplicative_order(a, 15).unwrap();
        assert_eq!(record.order, Some(r), "a={a}");
        let expect_reject = if r % 2 == 1 {
            Some(Rejection::OddOrder)
        } else if mod_pow(a, r / 2, 15) == 14 {
            Some(Rejection::TrivialSquareRoot)
        } else {
            None
        };
        assert_eq!(record.rejection, expect_reject, "a={a}");
        assert_eq!(factors.is_some(), expect_reject.is_none());
    }
}

#[test]
fn random_mode_factors_and_replays() {
    for n in [15u64, 21, 33, 35] {
        let config = RunConfig { mode: Mode::Random, seed: 11, ..exact_config() };
        let first = factor(n, &config).unwrap();
        assert_eq!(first.status, Status::Success, "N={n}: {:?}", first.attempts);
        let (p, q) = first.factors.unwrap();
        assert_eq!(p * q, n);
        let second = factor(n, &config).unwrap();
        assert_eq!(first.without_timings(), second.without_timings());
    }
}

#[test]
fn dense_and_mps_backends_agree_on_outcomes() {
    for mode in [Mode::Preselected, Mode::Random] {
        let mps = factor(15, &RunConfig { mode, seed: 3, ..exact_config() }).unwrap();
        let dense = factor(15, &RunConfig { mode, seed: 3, backend: Backend::Dense, ..exact_config() }).unwrap();
        assert_eq!(mps.factors, dense.factors);
        assert_eq!(
            mps.attempts.iter().map(|a| a.a).collect::<Vec<_>>(),
            dense.attempts.iter().map(|a| a.a).collect::<Vec<_>>()
        );
    }
}

#[test]
fn tiny_budget_times_out_cleanly() {
    let config = RunConfig { mode: Mode::Random, timeout: Duration::from_nanos(1), ..exact_config() };
    let out = factor(35, &config).unwrap();
    assert_eq!(out.status, Status::Timeout);
    assert!(out.factors.is_none());
}

#[test]
fn outcome_records_round_trip() {
    let outs: Vec<_> = [15u64, 21]
        .iter()
        .map(|&n| factor(n, &RunConfig { mode: Mode::Random, seed: 2, ..exact_config() }).unwrap())
        .collect();
    let mut buf = Vec::new();
    write_outcomes_jsonl(&mut buf, &outs).unwrap();
    assert_eq!(String::from_utf8_lossy(&buf).lines().count(), 2);
    assert_eq!(read_outcomes_jsonl(&buf[..]).unwrap(), outs);
}

#[test]
fn order_thirty_histogram_concentrates_near_peaks() {
    let report = histogram_report(93, 80, 512, Backend::Mps, TruncationPolicy::new(1024, 1e-12).unwrap(), 4).unwrap();
    assert_eq!(report.order, 30);
    assert_eq!(report.counting_qubits, 14);
    assert_eq!(report.expected_peaks.len(), 30);
    assert!(report.noiseless_mass_near_peaks >= 0.90, "{}", report.noiseless_mass_near_peaks);
    assert!(report.mass_near_peaks(1.0) > 0.8);
}
