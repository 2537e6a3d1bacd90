use ksearch_core::evolve::{
    brute_force_engine, fidelity_series, max_fidelity, propagate, BruteForceSector, Coupling,
    Engine, FullSpaceHamiltonian, GammaSpec, SearchConfig,
};
use ksearch_core::hamiltonian::{
    build_mark, build_search, build_walk, long_range_couplings, CouplingMatrix,
};
use ksearch_core::reduced::{build_reduced, project_onto_classes, reduced_from_intersections};
use ksearch_core::subspace::{BasisState, SubspaceBasis};
use ksearch_core::uniform_state;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_couplings(n: usize, rng: &mut ChaCha8Rng) -> CouplingMatrix {
    let mut upper = vec![0.0; n * n];
    for p in 0..n {
        for q in p + 1..n {
            upper[p * n + q] = rng.random_range(-1.0..1.0);
        }
    }
    CouplingMatrix::from_fn(n, |p, q| {
        if p < q {
            upper[p * n + q]
        } else {
            upper[q * n + p]
        }
    })
    .unwrap()
}

fn sector_fidelity(
    n: usize,
    k: usize,
    marked: &[usize],
    j: &CouplingMatrix,
    gamma: f64,
    t: f64,
) -> f64 {
    let basis = SubspaceBasis::new(n, k).unwrap();
    let h = build_search(
        &build_walk(&basis, j).unwrap(),
        &build_mark(&basis, marked).unwrap(),
        gamma,
    )
    .unwrap();
    let psi = propagate(&h, &uniform_state(&basis), t).unwrap();
    let w = basis
        .rank(&BasisState::from_sites(marked, n).unwrap())
        .unwrap();
    psi[w].norm_sqr()
}

#[test]
fn full_and_reduced_agree_at_n10() {
    for k in 1..=4 {
        let base = SearchConfig::new(10, k, 0.1).with_window(30.0, 500);
        let r = fidelity_series(&base.clone().with_engine(Engine::Reduced)).unwrap();
        let s = fidelity_series(&base.with_engine(Engine::Sparse)).unwrap();
        let err = r
            .values
            .iter()
            .zip(&s.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err <= 1e-8, "k={k}: {err:e}");
    }
}

#[test]
fn sector_engine_matches_full_space_on_random_couplings() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for (n, k) in [(6, 2), (7, 3), (8, 4), (9, 2)] {
        let j = random_couplings(n, &mut rng);
        let marked: Vec<usize> = {
            let mut m: Vec<usize> = (1..=n).collect();
            for i in 0..k {
                let r = rng.random_range(i..n);
                m.swap(i, r);
            }
            let mut m = m[..k].to_vec();
            m.sort_unstable();
            m
        };
        let gamma = rng.random_range(0.05..0.5);
        let sector = BruteForceSector::new(n, k, &marked, &j, gamma).unwrap();
        assert_eq!(sector.leakage, 0.0);
        let basis = SubspaceBasis::new(n, k).unwrap();
        assert_eq!(sector.states, basis.words());
        let h = build_search(
            &build_walk(&basis, &j).unwrap(),
            &build_mark(&basis, &marked).unwrap(),
            gamma,
        )
        .unwrap()
        .to_dense();
        assert!((h - &sector.matrix).amax() < 1e-14);
        let psi0 = uniform_state(&basis);
        let w = basis
            .rank(&BasisState::from_sites(&marked, n).unwrap())
            .unwrap();
        for _ in 0..5 {
            let t = rng.random_range(0.0..20.0);
            let a = brute_force_engine(n, k, &marked, &j, gamma, &psi0, t).unwrap()[w].norm_sqr();
            let b = sector_fidelity(n, k, &marked, &j, gamma, t);
            assert!((a - b).abs() < 1e-10, "n={n} k={k} t={t}");
        }
    }
}

#[test]
fn walk_restriction_equals_sector_walk() {
    for n in 2..=10 {
        let j = long_range_couplings(n, 0.7).unwrap();
        let full = FullSpaceHamiltonian::new(n, &[], &j, 1.0).unwrap();
        for k in 0..=n {
            let (m, states, leak) = full.restrict(k);
            assert_eq!(leak, 0.0);
            let basis = SubspaceBasis::new(n, k).unwrap();
            assert_eq!(states, basis.words());
            let walk = build_walk(&basis, &j).unwrap().to_dense();
            assert!((walk - m).amax() < 1e-14, "n={n} k={k}");
        }
    }
}

#[test]
fn constructors_agree() {
    for n in 2..=14 {
        for k in 1..=n / 2 {
            let basis = SubspaceBasis::new(n, k).unwrap();
            let w = BasisState::from_sites(&(1..=k).collect::<Vec<_>>(), n).unwrap();
            let table = basis.distance_classes(&w).unwrap();
            let j = CouplingMatrix::all_to_all(n);
            let walk = build_walk(&basis, &j).unwrap();
            let mark = build_mark(&basis, &(1..=k).collect::<Vec<_>>()).unwrap();
            for gamma in [0.0, 0.1, 1.0 / n as f64] {
                let h = build_search(&walk, &mark, gamma).unwrap();
                let proj = project_onto_classes(&h, &table);
                let red = build_reduced(n, k, gamma).unwrap().to_dense();
                let via = reduced_from_intersections(n, k, gamma).unwrap();
                assert!(
                    (&proj - &red).amax() < 1e-12,
                    "n={n} k={k} gamma={gamma} {:e}",
                    (&proj - &red).amax()
                );
                assert!((&via - &red).amax() < 1e-12, "n={n} k={k} gamma={gamma}");
            }
        }
    }
}

#[test]
fn engines_agree_on_maximum() {
    let base = SearchConfig::new(10, 2, 0.1);
    let r = max_fidelity(&base.clone().with_engine(Engine::Reduced)).unwrap();
    let s = max_fidelity(&base.clone().with_engine(Engine::Sparse)).unwrap();
    let b = max_fidelity(&base.with_engine(Engine::BruteForce)).unwrap();
    assert!((r.value - s.value).abs() < 1e-9);
    assert!((r.value - b.value).abs() < 1e-9);
    assert!((r.time - s.time).abs() < 1e-6);
}

#[test]
fn zero_alpha_equals_all_to_all() {
    for k in 1..=3 {
        let base =
            SearchConfig::new(9, k, 0.0).with_gamma(GammaSpec::Optimize { lo: 0.01, hi: 1.0 });
        let a = max_fidelity(&base.clone().with_engine(Engine::Reduced)).unwrap();
        let l = max_fidelity(
            &base
                .with_coupling(Coupling::LongRange { alpha: 0.0 })
                .with_engine(Engine::Sparse),
        )
        .unwrap();
        assert!(
            (a.value - l.value).abs() < 1e-6,
            "k={k}: {} vs {}",
            a.value,
            l.value
        );
    }
}

#[test]
fn krylov_path_matches_dense_path() {
    let mut dense = SearchConfig::new(11, 3, 0.15)
        .with_coupling(Coupling::LongRange { alpha: 1.5 })
        .with_marked(vec![2, 6, 9])
        .with_window(12.0, 400);
    dense.dense_limit = 10_000;
    let mut krylov = dense.clone();
    krylov.dense_limit = 0;
    let a = fidelity_series(&dense).unwrap();
    let b = fidelity_series(&krylov).unwrap();
    for (x, y) in a.values.iter().zip(&b.values) {
        assert!((x - y).abs() < 1e-9);
    }
    assert!((a.peak_value - b.peak_value).abs() < 1e-9);
}

#[test]
fn marked_site_choice_matters_only_with_long_range() {
    let t = 3.7;
    let all = CouplingMatrix::all_to_all(8);
    let a = sector_fidelity(8, 2, &[1, 2], &all, 0.2, t);
    let b = sector_fidelity(8, 2, &[3, 7], &all, 0.2, t);
    assert!((a - b).abs() < 1e-12);
    let lr = long_range_couplings(8, 2.0).unwrap();
    let a = sector_fidelity(8, 2, &[1, 2], &lr, 0.2, t);
    let b = sector_fidelity(8, 2, &[1, 5], &lr, 0.2, t);
    assert!((a - b).abs() > 1e-6);
}

#[test]
fn state_stays_normalised_over_long_times() {
    let basis = SubspaceBasis::new(12, 5).unwrap();
    let j = long_range_couplings(12, 1.0).unwrap();
    let h = build_search(
        &build_walk(&basis, &j).unwrap(),
        &build_mark(&basis, &[1, 2, 3, 4, 5]).unwrap(),
        0.1,
    )
    .unwrap();
    let psi = propagate(&h, &uniform_state(&basis), 50.0).unwrap();
    let norm: f64 = psi.iter().map(Complex64::norm_sqr).sum();
    assert!((norm - 1.0).abs() < 1e-10);
}
