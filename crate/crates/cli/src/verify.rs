use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use ksearch_core::evolve::{
    fidelity_series, propagate_with, BruteForceSector, Engine, FullSpaceHamiltonian, KrylovOptions,
    Method, SearchConfig,
};
use ksearch_core::hamiltonian::{
    build_mark, build_search, build_walk, long_range_couplings, CouplingMatrix,
};
use ksearch_core::io::write_json;
use ksearch_core::protocols::{min_repeats_r, min_trials_s, repeat_failure};
use ksearch_core::reduced::{
    asymptotic_fidelity, build_reduced, closed_form_f3, max_asymptotic, project_onto_classes,
    reduced_from_intersections, DEFAULT_TAU_MAX,
};
use ksearch_core::subspace::{hamming_distance, intersection_count, BasisState, SubspaceBasis};
use ksearch_core::{uniform_state, Coupling, GammaSpec};
use num_complex::Complex64;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::args::VerifyArgs;
use crate::commands::{
    run_asymptotic, run_fidelity, run_manifest, run_protocol, AsymptoticParams, FidelityParams,
    Outcome, ProtocolParams,
};
use crate::error::{CliError, CliResult};
use crate::manifest::{output_prefix, same_content, with_suffix, write_file, RunManifest};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyParams {
    pub full: bool,
    pub seed: u64,
}

impl VerifyParams {
    fn max_n(&self) -> usize {
        if self.full {
            12
        } else {
            8
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub tolerance: f64,
    /// Worst error seen; `null` when the check could not run.
    pub observed: Option<f64>,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub suite: String,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<Check>,
}

pub fn resolve_verify(a: VerifyArgs) -> (VerifyParams, PathBuf) {
    let params = VerifyParams {
        full: a.full,
        seed: a.seed.unwrap_or_else(rand::random),
    };
    let stem = if params.full {
        "verify_full"
    } else {
        "verify_quick"
    };
    (params, output_prefix(a.out.as_deref(), stem))
}

fn check(name: &str, tolerance: f64, result: CliResult<(f64, Option<String>)>) -> Check {
    match result {
        Ok((observed, detail)) => Check {
            name: name.into(),
            tolerance,
            observed: Some(observed),
            pass: observed <= tolerance,
            detail,
        },
        Err(e) => Check {
            name: name.into(),
            tolerance,
            observed: None,
            pass: false,
            detail: Some(e.to_string()),
        },
    }
}

fn max_gap<'a>(a: impl IntoIterator<Item = &'a f64>, b: impl IntoIterator<Item = &'a f64>) -> f64 {
    a.into_iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn first_k(k: usize) -> Vec<usize> {
    (1..=k).collect()
}

fn closed_form_k2() -> CliResult<(f64, Option<String>)> {
    let m = max_asymptotic(2, DEFAULT_TAU_MAX)?;
    let err = (m.fidelity - 8.0 / 9.0)
        .abs()
        .max((m.tau - PI / 6f64.sqrt()).abs());
    Ok((err, Some(format!("F = {}, tau = {}", m.fidelity, m.tau))))
}

fn closed_form_k3() -> CliResult<(f64, Option<String>)> {
    let mut worst: f64 = 0.0;
    for i in 0..=4000 {
        let tau = DEFAULT_TAU_MAX * i as f64 / 4000.0;
        worst = worst.max((asymptotic_fidelity(3, tau)? - closed_form_f3(tau)).abs());
    }
    Ok((worst, None))
}

fn rabi_k1() -> CliResult<(f64, Option<String>)> {
    let mut worst: f64 = 0.0;
    for i in 0..=1000 {
        let tau = DEFAULT_TAU_MAX * i as f64 / 1000.0;
        worst = worst.max((asymptotic_fidelity(1, tau)? - tau.sin().powi(2)).abs());
    }
    Ok((worst, None))
}

fn engine_triangle(max_n: usize) -> CliResult<(f64, Option<String>)> {
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for n in 2..=max_n {
        for k in 1..=n / 2 {
            let base = SearchConfig::new(n, k, 0.1).with_window(10.0 * (n as f64).sqrt(), 150);
            let r = fidelity_series(&base.clone().with_engine(Engine::Reduced))?;
            let s = fidelity_series(&base.clone().with_engine(Engine::Sparse))?;
            let b = fidelity_series(&base.with_engine(Engine::BruteForce))?;
            worst = worst
                .max(max_gap(&r.values, &s.values))
                .max(max_gap(&s.values, &b.values));
            cases += 1;
        }
    }
    Ok((worst, Some(format!("{cases} (n, k) systems, n <= {max_n}"))))
}

fn engine_overlay_n10() -> CliResult<(f64, Option<String>)> {
    let mut worst: f64 = 0.0;
    for k in 1..=4 {
        let base = SearchConfig::new(10, k, 0.1).with_window(10.0 * 10f64.sqrt(), 500);
        let r = fidelity_series(&base.clone().with_engine(Engine::Reduced))?;
        let s = fidelity_series(&base.with_engine(Engine::Sparse))?;
        worst = worst.max(max_gap(&r.values, &s.values));
    }
    Ok((worst, Some("n = 10, gamma = 0.1, k = 1..4".into())))
}

fn constructor_equivalence(max_n: usize) -> CliResult<(f64, Option<String>)> {
    let mut worst: f64 = 0.0;
    for n in 2..=max_n {
        let j = CouplingMatrix::all_to_all(n);
        for k in 1..=n / 2 {
            let basis = SubspaceBasis::new(n, k)?;
            let table = basis.distance_classes(&BasisState::from_sites(&first_k(k), n)?)?;
            let walk = build_walk(&basis, &j)?;
            let mark = build_mark(&basis, &first_k(k))?;
            for gamma in [0.1, 1.0 / n as f64] {
                let h = build_search(&walk, &mark, gamma)?;
                let red = build_reduced(n, k, gamma)?.to_dense();
                let proj = project_onto_classes(&h, &table);
                let via = reduced_from_intersections(n, k, gamma)?;
                worst = worst.max((&proj - &red).amax()).max((&via - &red).amax());
            }
        }
    }
    Ok((worst, None))
}

fn random_coupling_brute_force(
    max_n: usize,
    rng: &mut ChaCha8Rng,
) -> CliResult<(f64, Option<String>)> {
    let mut worst: f64 = 0.0;
    for n in 2..=max_n {
        let k = rng.random_range(1..=n / 2);
        let mut upper = vec![0.0; n * n];
        for v in upper.iter_mut() {
            *v = rng.random_range(-1.0..1.0);
        }
        let j = CouplingMatrix::from_fn(n, |p, q| upper[p.min(q) * n + p.max(q)])?;
        let mut sites: Vec<usize> = (1..=n).collect();
        sites.sort_by_key(|_| rng.random::<u32>());
        let mut marked = sites[..k].to_vec();
        marked.sort_unstable();
        let gamma = rng.random_range(0.05..1.0);

        let basis = SubspaceBasis::new(n, k)?;
        let h = build_search(
            &build_walk(&basis, &j)?,
            &build_mark(&basis, &marked)?,
            gamma,
        )?;
        let sector = BruteForceSector::new(n, k, &marked, &j, gamma)?;
        worst = worst
            .max((h.to_dense() - &sector.matrix).amax())
            .max(sector.leakage);
        let psi0 = uniform_state(&basis);
        let w = basis.rank(&BasisState::from_sites(&marked, n)?)?;
        let reference = ksearch_core::spectral::Spectrum::new(sector.matrix).amplitude(w, &psi0);
        for _ in 0..5 {
            let t = rng.random_range(0.0..30.0);
            let f = propagate_with(&h, &psi0, t, Method::Dense)?[w].norm_sqr();
            worst = worst.max((f - reference.probability(t)).abs());
        }
    }
    Ok((worst, None))
}

fn walk_restriction(max_n: usize) -> CliResult<(f64, Option<String>)> {
    let mut worst: f64 = 0.0;
    for n in 2..=max_n.min(10) {
        let j = long_range_couplings(n, 0.8)?;
        let full = FullSpaceHamiltonian::new(n, &[], &j, 1.0)?;
        for k in 0..=n {
            let (m, states, leakage) = full.restrict(k);
            let basis = SubspaceBasis::new(n, k)?;
            if states != basis.words() {
                return Err(CliError::Mismatch(format!(
                    "sector ordering differs at n={n} k={k}"
                )));
            }
            worst = worst
                .max(leakage)
                .max((build_walk(&basis, &j)?.to_dense() - m).amax());
        }
    }
    Ok((worst, None))
}

fn intersection_counts(max_n: usize) -> CliResult<(f64, Option<String>)> {
    let mut wrong = 0u32;
    for n in 2..=max_n {
        for k in 1..=n / 2 {
            let b = SubspaceBasis::new(n, k)?;
            let w = BasisState::from_sites(&first_k(k), n)?;
            let table = b.distance_classes(&w)?;
            for i in 1..=k + 1 {
                let Some(&a) = table.classes[i - 1].first() else {
                    continue;
                };
                let a = b.unrank(a)?;
                let nbrs = b.neighbors(&a)?;
                for j in 1..=k + 1 {
                    let mut count = 0u64;
                    for &v in &nbrs {
                        if hamming_distance(&w, &b.unrank(v)?)? as usize == 2 * (j - 1) {
                            count += 1;
                        }
                    }
                    wrong += u32::from(intersection_count(n, k, i, j)? != count);
                }
            }
        }
    }
    Ok((f64::from(wrong), Some("mismatched entries".into())))
}

fn johnson_degree(max_n: usize) -> CliResult<(f64, Option<String>)> {
    let mut wrong = 0u32;
    for n in 1..=max_n {
        for k in 0..=n {
            let b = SubspaceBasis::new(n, k)?;
            for s in b.iter() {
                let nbrs = b.neighbors(&s)?;
                wrong += u32::from(nbrs.len() != k * (n - k));
                for v in nbrs {
                    wrong += u32::from(hamming_distance(&s, &b.unrank(v)?)? != 2);
                }
            }
        }
    }
    Ok((
        f64::from(wrong),
        Some("states with wrong degree or non-adjacent neighbours".into()),
    ))
}

fn coupon_table() -> CliResult<(f64, Option<String>)> {
    let s = (1..=5)
        .map(|k| min_trials_s(k, 0.01))
        .collect::<Result<Vec<_>, _>>()?;
    let wrong = s
        .iter()
        .zip([1, 8, 15, 21, 28])
        .filter(|(a, b)| **a != *b)
        .count();
    Ok((wrong as f64, Some(format!("s_k at eps = 0.01: {s:?}"))))
}

fn repeat_threshold() -> CliResult<(f64, Option<String>)> {
    let mut worst: f64 = 0.0;
    for (f, eps) in [(0.5, 0.005), (8.0 / 9.0, 0.005), (0.3, 0.01)] {
        let r = min_repeats_r(f, eps)?;
        // P(fewer than 2 successes) as 1 - sum of the binomial terms x >= 2
        let at_least_two: f64 = (2..=r)
            .map(|x| {
                let c = (0..x).fold(1.0, |acc, i| acc * (r - i) as f64 / (i + 1) as f64);
                c * f.powi(x as i32) * (1.0 - f).powi((r - x) as i32)
            })
            .sum();
        worst = worst.max((1.0 - at_least_two - repeat_failure(f, r)).abs());
        if repeat_failure(f, r) >= eps || (r > 2 && repeat_failure(f, r - 1) < eps) {
            return Err(CliError::Mismatch(format!(
                "r = {r} is not minimal for F = {f}"
            )));
        }
    }
    Ok((worst, None))
}

fn krylov_vs_dense(max_n: usize) -> CliResult<(f64, Option<String>)> {
    let n = max_n;
    let k = n / 2;
    let mut dense = SearchConfig::new(n, k, 0.15)
        .with_coupling(Coupling::LongRange { alpha: 1.5 })
        .with_marked((1..=k).map(|i| 2 * i - 1).collect())
        .with_window(12.0, 300);
    dense.dense_limit = usize::MAX;
    let mut krylov = dense.clone();
    krylov.dense_limit = 0;
    let a = fidelity_series(&dense)?;
    let b = fidelity_series(&krylov)?;
    Ok((
        max_gap(&a.values, &b.values),
        Some(format!("n = {n}, k = {k}, alpha = 1.5")),
    ))
}

fn unitarity(max_n: usize, rng: &mut ChaCha8Rng) -> CliResult<(f64, Option<String>)> {
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let n = rng.random_range(2..=max_n);
        let k = rng.random_range(1..=n / 2);
        let basis = SubspaceBasis::new(n, k)?;
        let j = long_range_couplings(n, rng.random_range(0.0..3.0))?;
        let h = build_search(
            &build_walk(&basis, &j)?,
            &build_mark(&basis, &first_k(k))?,
            rng.random_range(0.0..1.0),
        )?;
        let psi0 = uniform_state(&basis);
        let t = rng.random_range(0.0..30.0);
        for method in [Method::Dense, Method::Krylov(KrylovOptions::default())] {
            let psi = propagate_with(&h, &psi0, t, method)?;
            let norm: f64 = psi.iter().map(Complex64::norm_sqr).sum();
            let back = propagate_with(&h, &psi, -t, method)?;
            let rev = back
                .iter()
                .zip(&psi0)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            worst = worst.max((norm - 1.0).abs()).max(rev);
        }
    }
    Ok((worst, Some("norm drift and forward-backward error".into())))
}

/// Compares every CSV body and every JSON payload of two runs.
fn diff_outputs(first: &[PathBuf], second: &[PathBuf]) -> CliResult<usize> {
    let mut differing = 0;
    for (a, b) in first.iter().zip(second) {
        let ta = fs::read_to_string(a).map_err(|e| CliError::io(a, e))?;
        let tb = fs::read_to_string(b).map_err(|e| CliError::io(b, e))?;
        let same = same_content(a, &ta, &tb)?;
        differing += usize::from(!same);
    }
    Ok(differing + first.len().abs_diff(second.len()))
}

/// Writes an output, reads its manifest back from the first file and
/// regenerates it elsewhere.
fn replay_round_trip(
    dir: &Path,
    name: &str,
    generate: impl FnOnce(&Path) -> CliResult<Outcome>,
) -> CliResult<(f64, Option<String>)> {
    let first = generate(&dir.join(format!("{name}_a")))?;
    let manifest = RunManifest::read(&first.outputs[0])?;
    let second = run_manifest(&manifest, &dir.join(format!("{name}_b")))?;
    let differing = diff_outputs(&first.outputs, &second.outputs)?;
    Ok((
        differing as f64,
        Some(format!("params {}", manifest.params)),
    ))
}

fn replay_checks(params: &VerifyParams, rng: &mut ChaCha8Rng) -> Vec<Check> {
    let dir = match tempfile::tempdir() {
        Ok(d) => d,
        Err(e) => {
            let err = || {
                Err(CliError::io(
                    std::env::temp_dir(),
                    std::io::Error::new(e.kind(), e.to_string()),
                ))
            };
            return ["replay_fidelity", "replay_asymptotic", "replay_protocol"]
                .iter()
                .map(|n| check(n, 0.0, err()))
                .collect();
        }
    };
    let max_n = params.max_n();

    let n = rng.random_range(4..=max_n);
    let k = rng.random_range(1..=n / 2);
    let long_range = rng.random_bool(0.5);
    let coupling = if long_range {
        Coupling::LongRange {
            alpha: *[0.5, 1.0, 2.0].choose(rng).expect("non-empty"),
        }
    } else {
        Coupling::AllToAll
    };
    let engines = if long_range {
        vec![*[Engine::Sparse, Engine::BruteForce]
            .choose(rng)
            .expect("non-empty")]
    } else {
        vec![Engine::Reduced, Engine::Sparse]
    };
    let mut marked: Vec<usize> = (1..=n).collect();
    marked.sort_by_key(|_| rng.random::<u32>());
    marked.truncate(k);
    marked.sort_unstable();
    let fidelity = FidelityParams {
        n,
        k,
        marked,
        coupling,
        gamma: GammaSpec::Fixed {
            value: rng.random_range(0.05..0.5),
        },
        t_max: 10.0 * (n as f64).sqrt(),
        points: 200,
        engines,
    };
    let asymptotic = AsymptoticParams {
        kmax: rng.random_range(2..=8),
        tau_max: DEFAULT_TAU_MAX,
        points: 301,
    };
    let protocol = ProtocolParams {
        ks: (1..=rng.random_range(2..=3)).collect(),
        ns: vec![2 * max_n, rng.random_range(10..=40)],
        large_n: true,
        epsilon_s: 0.005,
        epsilon_r: 0.005,
    };

    vec![
        check(
            "replay_fidelity",
            0.0,
            replay_round_trip(dir.path(), "fidelity", |p| run_fidelity(&fidelity, p)),
        ),
        check(
            "replay_asymptotic",
            0.0,
            replay_round_trip(dir.path(), "asymptotic", |p| run_asymptotic(&asymptotic, p)),
        ),
        check(
            "replay_protocol",
            0.0,
            replay_round_trip(dir.path(), "protocol", |p| run_protocol(&protocol, p)),
        ),
    ]
}

pub fn run_checks(params: &VerifyParams) -> Vec<Check> {
    let max_n = params.max_n();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut checks = vec![
        check("closed_form_k2_maximum", 1e-6, closed_form_k2()),
        check("closed_form_k3_curve", 1e-9, closed_form_k3()),
        check("single_excitation_rabi", 1e-12, rabi_k1()),
        check("engine_triangle", 1e-8, engine_triangle(max_n)),
        check(
            "constructor_equivalence",
            1e-12,
            constructor_equivalence(max_n),
        ),
        check(
            "random_couplings_vs_brute_force",
            1e-10,
            random_coupling_brute_force(max_n, &mut rng),
        ),
        check("walk_restriction_to_sector", 1e-14, walk_restriction(max_n)),
        check("intersection_counts", 0.0, intersection_counts(max_n)),
        check("johnson_graph_degree", 0.0, johnson_degree(max_n)),
        check("coupon_collector_table", 0.0, coupon_table()),
        check("repeat_count_binomial_tail", 1e-14, repeat_threshold()),
        check("krylov_matches_dense", 1e-9, krylov_vs_dense(max_n)),
        check(
            "unitarity_and_time_reversal",
            1e-10,
            unitarity(max_n, &mut rng),
        ),
    ];
    if params.full {
        checks.push(check("engine_overlay_n10", 1e-8, engine_overlay_n10()));
    }
    checks.extend(replay_checks(params, &mut rng));
    checks
}

pub fn run_verify(params: &VerifyParams, prefix: &Path) -> CliResult<(Outcome, Report)> {
    let start = Instant::now();
    let json = with_suffix(prefix, ".json");
    let manifest = RunManifest::new("verify", params, std::slice::from_ref(&json))?;
    let checks = run_checks(params);
    let report = Report {
        suite: if params.full { "full" } else { "quick" }.into(),
        seed: params.seed,
        passed: checks.iter().all(|c| c.pass),
        checks,
    };
    write_file(&json, |w| write_json(w, &manifest, "report", &report))?;
    let mut summary: Vec<String> = report
        .checks
        .iter()
        .map(|c| {
            let observed = c.observed.map_or("n/a".to_string(), |o| format!("{o:.2e}"));
            let status = if c.pass { "PASS" } else { "FAIL" };
            format!(
                "{status} {} (observed {observed}, tolerance {:.0e})",
                c.name, c.tolerance
            )
        })
        .collect();
    let failed = report.checks.iter().filter(|c| !c.pass).count();
    summary.push(format!(
        "{} of {} checks passed in {:.1?}",
        report.checks.len() - failed,
        report.checks.len(),
        start.elapsed()
    ));
    Ok((
        Outcome {
            outputs: vec![json],
            summary,
        },
        report,
    ))
}
