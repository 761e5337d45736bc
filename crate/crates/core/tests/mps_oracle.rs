use nalgebra::{Matrix2, Matrix4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use shor_mps::circuit::{random_circuit, random_unitary, shor_order_circuit, Circuit, Gate};
use shor_mps::dense::{dense_entropy, dense_run, dense_sample};
use shor_mps::mps::{MpsState, TruncationPolicy};
use shor_mps::C64;

fn exact() -> TruncationPolicy {
    TruncationPolicy::unbounded()
}

fn mps_run(c: &Circuit, policy: TruncationPolicy) -> MpsState {
    let mut s = MpsState::new(c.width, policy);
    s.run_circuit(c).unwrap();
    s
}

#[test]
fn random_circuits_match_dense() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for seed in 0..12 {
        let width = rng.gen_range(2..=10);
        let depth = rng.gen_range(1..=12);
        let c = random_circuit(width, depth, seed);
        let m = mps_run(&c, exact());
        let d = dense_run(&c).unwrap();
        let v = m.to_statevector().unwrap();
        assert!(d.fidelity(&v) > 1.0 - 1e-9, "seed {seed}");
        for (a, b) in d.amplitudes.iter().zip(&v) {
            assert!((a - b).norm() < 1e-10, "seed {seed}");
        }
    }
}

#[test]
fn random_two_qubit_unitary_on_random_state() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut c = random_circuit(10, 4, 99);
    for (a, b) in [(2usize, 7usize), (9, 0), (4, 5)] {
        let u = random_unitary(4, &mut rng);
        c.push(Gate::Unitary2(a, b, Box::new(Matrix4::from_iterator(u.iter().copied())))).unwrap();
    }
    let v = mps_run(&c, TruncationPolicy::new(1024, 1e-12).unwrap()).to_statevector().unwrap();
    let d = dense_run(&c).unwrap();
    for (a, b) in d.amplitudes.iter().zip(&v) {
        assert!((a - b).norm() < 1e-10);
    }
}

#[test]
fn amplitudes_match_statevector() {
    let c = random_circuit(8, 5, 3);
    let m = mps_run(&c, exact());
    let d = dense_run(&c).unwrap();
    for index in 0..256usize {
        let bits: Vec<u8> = (0..8).map(|q| ((index >> q) & 1) as u8).collect();
        assert!((m.amplitude(&bits) - d.amplitudes[index]).norm() < 1e-10);
        assert_eq!(m.amplitude(&bits), m.amplitude_of_index(index));
    }
}

#[test]
fn order_finding_circuits_match_dense() {
    for (n, a) in [(15u64, 4u64), (15, 7), (15, 2), (21, 8)] {
        let c = shor_order_circuit(n, a).unwrap();
        let m = mps_run(&c, TruncationPolicy::new(1024, 1e-12).unwrap());
        let d = dense_run(&c).unwrap();
        assert!(d.fidelity(&m.to_statevector().unwrap()) > 1.0 - 1e-9, "N={n} a={a}");
    }
}

#[test]
fn lowered_and_native_runs_agree() {
    let c = shor_order_circuit(15, 7).unwrap();
    let a = mps_run(&c, exact()).to_statevector().unwrap();
    let b = mps_run(&c.lowered(), exact()).to_statevector().unwrap();
    let overlap: C64 = a.iter().zip(&b).map(|(x, y)| x.conj() * y).sum();
    assert!(overlap.norm_sqr() > 1.0 - 1e-10);
}

#[test]
fn entropy_bounds_on_random_states() {
    for seed in 0..8 {
        let n = 9;
        let m = mps_run(&random_circuit(n, 6, seed), exact());
        for cut in 1..n {
            let s = m.bond_entropy(cut);
            assert!(s >= 0.0 && s <= cut.min(n - cut) as f64 + 1e-10, "seed {seed} cut {cut}: {s}");
        }
        assert!(m.schmidt_number() <= 1 << (n / 2));
    }
}

#[test]
fn local_unitaries_leave_entropies_alone() {
    let n = 8;
    let mut m = mps_run(&random_circuit(n, 5, 21), exact());
    let before: Vec<f64> = (1..n).map(|cut| m.bond_entropy(cut)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for q in 0..n {
        let u = random_unitary(2, &mut rng);
        m.apply_1q(&Matrix2::from_iterator(u.iter().copied()), q).unwrap();
    }
    for (cut, b) in (1..n).zip(&before) {
        assert!((m.bond_entropy(cut) - b).abs() < 1e-10);
    }
}

#[test]
fn bond_entropy_matches_reduced_state() {
    for seed in 0..5 {
        let c = random_circuit(10, 6, 100 + seed);
        let m = mps_run(&c, exact());
        let d = dense_run(&c).unwrap();
        for cut in [1usize, 3, 5, 7, 9] {
            let left: Vec<usize> = (0..cut).collect();
            let right: Vec<usize> = (cut..10).collect();
            let s = m.bond_entropy(cut);
            assert!((s - dense_entropy(&d, &left).unwrap()).abs() < 1e-8, "seed {seed} cut {cut}");
            assert!((s - dense_entropy(&d, &right).unwrap()).abs() < 1e-8);
        }
    }
}

#[test]
fn storage_grows_with_chi_squared_times_n() {
    for (n, depth) in [(6usize, 2usize), (10, 4), (14, 6)] {
        let mut m = MpsState::new(n, TruncationPolicy::new(16, 1e-12).unwrap());
        let mut peak_elements = 0;
        let c = random_circuit(n, depth, n as u64);
        let every: Vec<usize> = (1..=c.gates.len()).collect();
        m.run_circuit_with(&c, None, &every, |_, s| {
            peak_elements = peak_elements.max(s.tensor_element_count());
        })
        .unwrap();
        let chi = m.stats.peak_chi;
        assert!(peak_elements <= 2 * chi * chi * n, "n={n} chi={chi} elements={peak_elements}");
    }
}

#[test]
fn truncated_runs_stay_normalised() {
    let c = random_circuit(10, 8, 8);
    for chi in [2usize, 4, 8, 16] {
        let mut m = MpsState::new(10, TruncationPolicy::new(chi, 1e-12).unwrap());
        let every: Vec<usize> = (1..=c.gates.len()).collect();
        m.run_circuit_with(&c, None, &every, |_, s| {
            assert!((s.norm_sqr() - 1.0).abs() <= 1e-9 + s.stats.discarded_weight);
        })
        .unwrap();
        assert!(m.schmidt_number() <= chi);
        for cut in 1..10 {
            let sum: f64 = m.lambda(cut - 1).iter().map(|l| l * l).sum();
            assert!((sum - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn sampling_follows_the_born_rule() {
    let c = random_circuit(5, 3, 12);
    let m = mps_run(&c, exact());
    let d = dense_run(&c).unwrap();
    let qubits = [4usize, 0, 2];
    let shots = 20_000;
    let hist = m.sample(&qubits, shots, 8);
    assert_eq!(hist, m.sample(&qubits, shots, 8));
    assert_eq!(hist.values().sum::<usize>(), shots);
    let mut probs = std::collections::BTreeMap::new();
    for (idx, amp) in d.amplitudes.iter().enumerate() {
        let key: String = qubits.iter().map(|&q| if (idx >> q) & 1 == 1 { '1' } else { '0' }).collect();
        *probs.entry(key).or_insert(0.0) += amp.norm_sqr();
    }
    for (key, p) in &probs {
        let f = *hist.get(key).unwrap_or(&0) as f64 / shots as f64;
        let sigma = (p * (1.0 - p) / shots as f64).sqrt();
        assert!((f - p).abs() <= 5.0 * sigma + 1e-12, "{key}: {f} vs {p}");
    }
    let dh = dense_sample(&d, &qubits, 500, 1);
    assert!(dh.keys().all(|k| probs[k] > 0.0));
}

#[test]
fn order_finding_samples_beyond_the_dense_limit() {
    let c = shor_order_circuit(93, 32).unwrap();
    assert_eq!(c.width, 30);
    let m = mps_run(&c, TruncationPolicy::new(1024, 1e-12).unwrap());
    let hist = m.sample(&c.measured, 256, 2);
    let values: Vec<u64> = hist
        .keys()
        .map(|bits| bits.bytes().enumerate().filter(|(_, b)| *b == b'1').map(|(k, _)| 1u64 << k).sum())
        .collect();
    assert!(values.iter().all(|v| *v == 0 || *v == 8192), "{values:?}");
    assert_eq!(m.stats.discarded_weight, 0.0);
}
