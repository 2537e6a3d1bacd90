use std::f64::consts::PI;

use ksearch_core::protocols::{
    coverage_tail, expected_trials, min_repeats_r, min_trials_s, repeat_failure,
};
use ksearch_core::reduced::{
    asymptotic_fidelity, closed_form_f2, closed_form_f3, max_asymptotic, max_asymptotic_with,
};
use ksearch_core::{max_fidelity, Engine, PeakRule, SearchConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DRAWS: usize = 1_000_000;

/// Two-sided 3σ level (p = 0.0027) shared across the 6 × 41 tail
/// comparisons made from the same simulation, Bonferroni-corrected.
const FAMILY_Z: f64 = 4.4;

/// Draws until every one of `k` sites has been seen; returns the count.
fn coupon_time(k: usize, rng: &mut ChaCha8Rng) -> u64 {
    let mut seen = 0u64;
    let mut count = 0;
    let full = (1u64 << k) - 1;
    while seen != full {
        seen |= 1 << rng.random_range(0..k);
        count += 1;
    }
    count
}

#[test]
fn coupon_collector_matches_simulation() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for k in 1..=6 {
        let times: Vec<u64> = (0..DRAWS).map(|_| coupon_time(k, &mut rng)).collect();
        let mean = times.iter().sum::<u64>() as f64 / DRAWS as f64;
        let var = times
            .iter()
            .map(|&t| (t as f64 - mean).powi(2))
            .sum::<f64>()
            / DRAWS as f64;
        let want = expected_trials(k).unwrap();
        assert!(
            (mean - want).abs() <= 3.0 * (var / DRAWS as f64).sqrt(),
            "k={k}: {mean} vs {want}"
        );

        for s in 0..=40u64 {
            let p = coverage_tail(k, s).unwrap();
            let hits = times.iter().filter(|&&t| t > s).count() as f64 / DRAWS as f64;
            let sigma = (p * (1.0 - p) / DRAWS as f64).sqrt();
            assert!(
                (hits - p).abs() <= FAMILY_Z * sigma + 1.0 / DRAWS as f64,
                "k={k} s={s}: {hits} vs {p}"
            );
        }
    }
}

#[test]
fn repeat_counts_match_simulation() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for (f, eps) in [(8.0 / 9.0, 0.005), (0.5, 0.005), (0.8012, 0.01)] {
        let r = min_repeats_r(f, eps).unwrap();
        for rr in [r - 1, r] {
            let fails = (0..DRAWS)
                .filter(|_| (0..rr).filter(|_| rng.random::<f64>() < f).count() < 2)
                .count() as f64
                / DRAWS as f64;
            let p = repeat_failure(f, rr);
            let sigma = (p * (1.0 - p) / DRAWS as f64).sqrt();
            assert!(
                (fails - p).abs() <= 3.0 * sigma,
                "F={f} r={rr}: {fails} vs {p}"
            );
        }
    }
    // exact binomial tail: P(X >= 2) = 1 - P(X = 0) - P(X = 1)
    let (f, r) = (0.5f64, min_repeats_r(0.5, 0.005).unwrap());
    let at_least_two: f64 = (2..=r)
        .map(|x| {
            let c = (0..x).fold(1.0, |acc, i| acc * (r - i) as f64 / (i + 1) as f64);
            c * f.powi(x as i32) * (1.0 - f).powi((r - x) as i32)
        })
        .sum();
    assert!((1.0 - at_least_two - repeat_failure(f, r)).abs() < 1e-14);
    assert_eq!(r, 12);
}

#[test]
fn printed_coverage_table() {
    let s: Vec<u64> = (1..=5).map(|k| min_trials_s(k, 0.01).unwrap()).collect();
    assert_eq!(s, [1, 8, 15, 21, 28]);
}

#[test]
fn two_excitation_closed_form() {
    let m = max_asymptotic(2, 4.0 * PI).unwrap();
    assert!((m.fidelity - 8.0 / 9.0).abs() < 1e-9);
    assert!((m.tau - PI / 6f64.sqrt()).abs() < 1e-6);
    for i in 0..=1000 {
        let tau = 4.0 * PI * i as f64 / 1000.0;
        assert!((asymptotic_fidelity(2, tau).unwrap() - closed_form_f2(tau)).abs() < 1e-12);
    }
}

#[test]
fn three_excitation_closed_form() {
    for i in 0..=1000 {
        let tau = 4.0 * PI * i as f64 / 1000.0;
        assert!((asymptotic_fidelity(3, tau).unwrap() - closed_form_f3(tau)).abs() < 1e-9);
    }
    let t = PI / (2.0 * (10.0 - 73f64.sqrt()).sqrt());
    assert!(asymptotic_fidelity(3, t).unwrap() >= 0.702);
    let m = max_asymptotic(3, 4.0 * PI).unwrap();
    assert!(m.fidelity >= 0.702);
}

#[test]
fn single_excitation_is_a_rabi_oscillation() {
    // R_1 = [[0,1],[1,0]]: F(τ) = sin²τ
    for i in 0..=200 {
        let tau = i as f64 * 0.05;
        assert!((asymptotic_fidelity(1, tau).unwrap() - tau.sin().powi(2)).abs() < 1e-12);
    }
    let m = max_asymptotic(1, 4.0 * PI).unwrap();
    assert!((m.fidelity - 1.0).abs() < 1e-12);
    assert!((m.tau - PI / 2.0).abs() < 1e-6);
}

#[test]
fn finite_n_approaches_asymptotic_maximum() {
    for k in 1..=4 {
        let asym = max_asymptotic(k, 4.0 * PI).unwrap();
        let n = 20_000usize;
        let cfg = SearchConfig::new(n, k, 1.0 / n as f64)
            .with_engine(Engine::Reduced)
            .with_window(4.0 * PI * (n as f64).sqrt(), 20_000);
        let m = max_fidelity(&cfg).unwrap();
        assert!((m.value - asym.fidelity).abs() < 0.02, "k={k}");
        assert!(
            (m.time / (n as f64).sqrt() - asym.tau).abs() < 0.05 * asym.tau,
            "k={k}"
        );
    }
}

#[test]
fn principal_peak_never_exceeds_global() {
    for k in 1..=20 {
        let p = max_asymptotic(k, 4.0 * PI).unwrap();
        let g = max_asymptotic_with(k, 4.0 * PI, PeakRule::Global, None).unwrap();
        assert!(p.fidelity <= g.fidelity + 1e-12);
        assert!(p.tau <= g.tau + 1e-9);
    }
}
