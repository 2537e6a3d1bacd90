use std::collections::VecDeque;

use ksearch_core::evolve::{propagate, propagate_with, KrylovOptions, Method};
use ksearch_core::hamiltonian::{
    build_mark, build_search, build_walk, long_range_couplings, CouplingMatrix, SparseHamiltonian,
};
use ksearch_core::protocols::{coverage_tail, min_repeats_r, min_trials_s, repeat_failure};
use ksearch_core::reduced::asymptotic_fidelity;
use ksearch_core::subspace::{
    binomial, class_size, hamming_distance, intersection_count, BasisState, SubspaceBasis,
};
use ksearch_core::{fidelity_series, uniform_state, Coupling, Engine, SearchConfig};
use num_complex::Complex64;
use proptest::prelude::*;

fn search_h(n: usize, k: usize, alpha: f64, gamma: f64, marked: &[usize]) -> SparseHamiltonian {
    let b = SubspaceBasis::new(n, k).unwrap();
    let j = long_range_couplings(n, alpha).unwrap();
    build_search(
        &build_walk(&b, &j).unwrap(),
        &build_mark(&b, marked).unwrap(),
        gamma,
    )
    .unwrap()
}

fn normalised(v: Vec<(f64, f64)>) -> Vec<Complex64> {
    let v: Vec<Complex64> = v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect();
    let s = v.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / s).collect()
}

fn norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(Complex64::norm_sqr).sum()
}

/// `(n, k, marked)` with `k <= n/2` and distinct sorted marks.
fn system(max_n: usize) -> impl Strategy<Value = (usize, usize, Vec<usize>)> {
    (2..=max_n)
        .prop_flat_map(|n| (Just(n), 1..=n / 2))
        .prop_flat_map(|(n, k)| {
            (
                Just(n),
                Just(k),
                proptest::sample::subsequence((1..=n).collect::<Vec<_>>(), k),
            )
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn evolution_is_unitary(
        (n, k, marked) in system(9),
        alpha in 0.0f64..3.0,
        gamma in 0.0f64..1.0,
        t in -20.0f64..20.0,
        seed in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 126),
    ) {
        let h = search_h(n, k, alpha, gamma, &marked);
        let mut raw = seed;
        raw.truncate(h.dim());
        prop_assume!(raw.iter().any(|&(a, b)| a != 0.0 || b != 0.0));
        let psi = normalised(raw);
        for method in [Method::Dense, Method::Krylov(KrylovOptions::default())] {
            let out = propagate_with(&h, &psi, t, method).unwrap();
            prop_assert!((norm_sqr(&out) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn energy_is_conserved(
        (n, k, marked) in system(9),
        alpha in 0.0f64..3.0,
        gamma in 0.0f64..1.0,
        t in 0.0f64..30.0,
    ) {
        let h = search_h(n, k, alpha, gamma, &marked);
        let psi = uniform_state(&SubspaceBasis::new(n, k).unwrap());
        let e0 = h.expectation(&psi);
        let e1 = h.expectation(&propagate(&h, &psi, t).unwrap());
        prop_assert!((e0 - e1).abs() < 1e-9 * (1.0 + e0.abs()));
    }

    #[test]
    fn backward_evolution_undoes_forward(
        (n, k, marked) in system(9),
        alpha in 0.0f64..3.0,
        gamma in 0.0f64..1.0,
        t in 0.0f64..25.0,
    ) {
        let h = search_h(n, k, alpha, gamma, &marked);
        let psi = uniform_state(&SubspaceBasis::new(n, k).unwrap());
        for method in [Method::Dense, Method::Krylov(KrylovOptions::default())] {
            let fwd = propagate_with(&h, &psi, t, method).unwrap();
            let back = propagate_with(&h, &fwd, -t, method).unwrap();
            let err = back.iter().zip(&psi).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            prop_assert!(err < 1e-10);
        }
    }

    #[test]
    fn fidelity_stays_in_unit_interval(
        (n, k, marked) in system(10),
        alpha in 0.0f64..3.0,
        gamma in 0.0f64..2.0,
    ) {
        let cfg = SearchConfig::new(n, k, gamma)
            .with_coupling(Coupling::LongRange { alpha })
            .with_marked(marked)
            .with_window(15.0, 200);
        let s = fidelity_series(&cfg).unwrap();
        prop_assert!(s.values.iter().all(|v| (0.0..=1.0).contains(v)));
        prop_assert!((0.0..=1.0).contains(&s.peak_value));
        prop_assert!(s.peak_value >= s.max_value - 1e-12);
    }

    #[test]
    fn reduced_fidelity_is_bounded(n in 2usize..2000, frac in 0.0f64..1.0, gamma in 0.0f64..0.1) {
        let k = 1 + ((n / 2 - 1) as f64 * frac) as usize;
        let k = k.min(12);
        let cfg = SearchConfig::new(n, k, gamma).with_engine(Engine::Reduced).with_window(50.0, 300);
        let s = fidelity_series(&cfg).unwrap();
        prop_assert!(s.values.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn asymptotic_fidelity_is_bounded(k in 1usize..60, tau in 0.0f64..20.0) {
        let f = asymptotic_fidelity(k, tau).unwrap();
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&f));
    }

    #[test]
    fn class_sizes_partition_the_basis(n in 1usize..=24, frac in 0.0f64..=1.0) {
        let k = (n as f64 * frac).round() as usize;
        let total: u64 = (0..=k.min(n - k)).map(|q| class_size(n, k, q)).sum();
        prop_assert_eq!(total, binomial(n, k));
    }

    #[test]
    fn rank_unrank_round_trip(n in 1usize..=20, frac in 0.0f64..=1.0, pick in any::<u64>()) {
        let k = (n as f64 * frac).round() as usize;
        let b = SubspaceBasis::new(n, k).unwrap();
        let r = (pick % b.len() as u64) as usize;
        let s = b.unrank(r).unwrap();
        prop_assert_eq!(s.weight(), k);
        prop_assert_eq!(b.rank(&s).unwrap(), r);
        prop_assert_eq!(s.to_string().parse::<BasisState>().unwrap(), s);
    }

    #[test]
    fn alpha_decays_couplings(n in 3usize..30, a in 0.0f64..3.0, da in 0.01f64..1.0) {
        let lo = long_range_couplings(n, a).unwrap();
        let hi = long_range_couplings(n, a + da).unwrap();
        for p in 0..n {
            for q in 0..n {
                if p == q {
                    continue;
                }
                prop_assert!(hi.get(p, q) <= lo.get(p, q));
                prop_assert!(lo.get(p, q) == lo.get(q, p));
                let r = p.abs_diff(q);
                if r > 1 && n - r > 1 {
                    prop_assert!(hi.get(p, q) < lo.get(p, q));
                }
            }
        }
    }

    #[test]
    fn repeat_count_is_the_binomial_threshold(f in 0.001f64..=1.0, eps in 0.0001f64..0.5) {
        let r = min_repeats_r(f, eps).unwrap();
        // P(fewer than 2 successes in r trials), summed as binomial terms
        let binom = |r: u64| {
            let rf = r as f64;
            (1.0 - f).powf(rf) + rf * f * (1.0 - f).powf(rf - 1.0)
        };
        prop_assert!(binom(r) < eps);
        prop_assert!(r == 2 || binom(r - 1) >= eps);
        prop_assert!(r >= 2);
        prop_assert_eq!(repeat_failure(f, r), binom(r));
    }
}

#[test]
fn johnson_graph_degree_and_diameter() {
    for n in 1..=10 {
        for k in 0..=n.min(5) {
            let b = SubspaceBasis::new(n, k).unwrap();
            for s in b.iter() {
                assert_eq!(b.neighbors(&s).unwrap().len(), k * (n - k));
            }
            // breadth-first search from the first state
            let mut dist = vec![usize::MAX; b.len()];
            dist[0] = 0;
            let mut queue = VecDeque::from([0usize]);
            while let Some(u) = queue.pop_front() {
                for v in b.neighbors(&b.unrank(u).unwrap()).unwrap() {
                    if dist[v] == usize::MAX {
                        dist[v] = dist[u] + 1;
                        queue.push_back(v);
                    }
                }
            }
            let start = b.unrank(0).unwrap();
            for (r, &d) in dist.iter().enumerate() {
                let h = hamming_distance(&start, &b.unrank(r).unwrap()).unwrap() as usize;
                assert_eq!(2 * d, h);
            }
            assert_eq!(*dist.iter().max().unwrap(), k.min(n - k));
        }
    }
}

#[test]
fn intersection_counts_match_enumeration() {
    for n in 2..=10 {
        for k in 1..=(n / 2).min(4) {
            let b = SubspaceBasis::new(n, k).unwrap();
            let w = BasisState::from_sites(&(1..=k).collect::<Vec<_>>(), n).unwrap();
            let table = b.distance_classes(&w).unwrap();
            for i in 1..=k + 1 {
                let Some(&a) = table.classes[i - 1].first() else {
                    continue;
                };
                let a = b.unrank(a).unwrap();
                for j in 1..=k + 1 {
                    let count = b
                        .neighbors(&a)
                        .unwrap()
                        .into_iter()
                        .filter(|&v| {
                            hamming_distance(&w, &b.unrank(v).unwrap()).unwrap() as usize
                                == 2 * (j - 1)
                        })
                        .count() as u64;
                    assert_eq!(
                        intersection_count(n, k, i, j).unwrap(),
                        count,
                        "n={n} k={k} i={i} j={j}"
                    );
                }
            }
        }
    }
}

#[test]
fn coverage_tail_is_monotone() {
    for k in 1..=40 {
        let mut prev = 1.0;
        for s in 0..(20 * k as u64) {
            let p = coverage_tail(k, s).unwrap();
            assert!((0.0..=1.0).contains(&p));
            assert!(p <= prev + 1e-15, "k={k} s={s}");
            prev = p;
        }
    }
    let mut prev = 0;
    for k in 1..=50 {
        let s = min_trials_s(k, 0.01).unwrap();
        assert!(s >= prev);
        prev = s;
    }
}

#[test]
fn all_to_all_walk_is_johnson_adjacency() {
    let b = SubspaceBasis::new(6, 3).unwrap();
    let walk = build_walk(&b, &CouplingMatrix::all_to_all(6)).unwrap();
    assert!(walk.is_symmetric());
    for r in 0..b.len() {
        let mut nbrs = b.neighbors(&b.unrank(r).unwrap()).unwrap();
        nbrs.sort_unstable();
        let row: Vec<usize> = walk.row(r).map(|(c, _)| c).collect();
        assert_eq!(row, nbrs);
        assert!(walk.row(r).all(|(_, v)| v == 1.0));
    }
}
