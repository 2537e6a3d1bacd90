use std::path::{Path, PathBuf};

use ksearch_core::evolve::{auto_gamma_range, optimize_gamma, FidelityMaximum};
use ksearch_core::io::{
    fmt_f64, write_asymptotic_table_csv, write_curves_csv, write_json, write_overlay_csv,
    write_protocol_csv, write_series_csv, Metadata,
};
use ksearch_core::protocols::{asymptotic_comparison, protocol_sweep, ProtocolComparison};
use ksearch_core::reduced::{asymptotic_table, AsymptoticCurve, DEFAULT_TAU_MAX};
use ksearch_core::{fidelity_series, Coupling, Engine, FidelitySeries, GammaSpec, SearchConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::args::{
    parse_gamma_range, parse_range, AsymptoticArgs, EngineArg, FidelityArgs, ProtocolArgs,
};
use crate::error::{CliError, CliResult};
use crate::manifest::{output_prefix, with_suffix, write_file, RunManifest};

pub const DEFAULT_POINTS: usize = 2000;
pub const DEFAULT_KMAX: usize = 20;
pub const DEFAULT_CURVE_POINTS: usize = 1001;
pub const DEFAULT_K_RANGE: &str = "1:5";
pub const DEFAULT_N_RANGE: &str = "16,32,64,128,256,512,1024,inf";
pub const DEFAULT_EPSILON: f64 = 0.005;

/// Files written by a command and a short human-readable summary.
#[derive(Debug)]
pub struct Outcome {
    pub outputs: Vec<PathBuf>,
    pub summary: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityParams {
    pub n: usize,
    pub k: usize,
    pub marked: Vec<usize>,
    pub coupling: Coupling,
    pub gamma: GammaSpec,
    pub t_max: f64,
    pub points: usize,
    pub engines: Vec<Engine>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticParams {
    pub kmax: usize,
    pub tau_max: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolParams {
    pub ks: Vec<usize>,
    pub ns: Vec<usize>,
    /// Add large-n rows computed from the asymptotic maxima.
    pub large_n: bool,
    pub epsilon_s: f64,
    pub epsilon_r: f64,
}

fn required<T>(v: Option<T>, flag: &str) -> CliResult<T> {
    v.ok_or_else(|| CliError::Usage(format!("{flag} is required")))
}

pub fn resolve_fidelity(a: FidelityArgs) -> CliResult<(FidelityParams, PathBuf)> {
    let n = required(a.n, "--n")?;
    let k = required(a.k, "--k")?;
    if a.alpha.is_some() && a.all_to_all {
        return Err(CliError::Usage(
            "--alpha and --all-to-all are mutually exclusive".into(),
        ));
    }
    let coupling = match a.alpha {
        Some(alpha) => Coupling::LongRange { alpha },
        None => Coupling::AllToAll,
    };
    let marked =
        match (a.marked, a.alpha) {
            (Some(m), _) => m,
            (None, Some(_)) => return Err(CliError::Usage(
                "--marked is required with --alpha (site choice matters for long-range couplings)"
                    .into(),
            )),
            (None, None) => (1..=k).collect(),
        };
    let gamma = match (a.gamma, a.optimize_gamma.as_deref()) {
        (Some(_), Some(_)) => {
            return Err(CliError::Usage(
                "--gamma and --optimize-gamma are mutually exclusive".into(),
            ))
        }
        (Some(value), None) => GammaSpec::Fixed { value },
        (None, Some(spec)) => {
            let (lo, hi) = match parse_gamma_range(spec)? {
                Some(r) => r,
                None => auto_gamma_range(n, &coupling)?,
            };
            GammaSpec::Optimize { lo, hi }
        }
        (None, None) => {
            return Err(CliError::Usage(
                "one of --gamma or --optimize-gamma is required".into(),
            ))
        }
    };
    let engines = match a.engine.unwrap_or(EngineArg::Sparse) {
        EngineArg::Reduced => vec![Engine::Reduced],
        EngineArg::Sparse => vec![Engine::Sparse],
        EngineArg::BruteForce => vec![Engine::BruteForce],
        EngineArg::Both => vec![Engine::Reduced, Engine::Sparse],
    };
    let t_max = a.tmax.unwrap_or(10.0 * (n as f64).sqrt());
    let params = FidelityParams {
        n,
        k,
        marked,
        coupling,
        gamma,
        t_max,
        points: a.points.unwrap_or(DEFAULT_POINTS),
        engines,
    };
    params.config(params.engines[0]).validate()?;
    let prefix = output_prefix(a.out.as_deref(), &format!("fidelity_n{n}_k{k}"));
    Ok((params, prefix))
}

pub fn resolve_asymptotic(a: AsymptoticArgs) -> CliResult<(AsymptoticParams, PathBuf)> {
    let params = AsymptoticParams {
        kmax: a.kmax.unwrap_or(DEFAULT_KMAX),
        tau_max: a.tau_max.unwrap_or(DEFAULT_TAU_MAX),
        points: a.points.unwrap_or(DEFAULT_CURVE_POINTS),
    };
    let prefix = output_prefix(a.out.as_deref(), &format!("asymptotic_k{}", params.kmax));
    Ok((params, prefix))
}

pub fn resolve_protocol(a: ProtocolArgs) -> CliResult<(ProtocolParams, PathBuf)> {
    let (ks, _) = parse_range(a.k_range.as_deref().unwrap_or(DEFAULT_K_RANGE), "k")?;
    let (ns, large_n) = parse_range(a.n_range.as_deref().unwrap_or(DEFAULT_N_RANGE), "n")?;
    let params = ProtocolParams {
        ks,
        ns,
        large_n,
        epsilon_s: a.eps_s.unwrap_or(DEFAULT_EPSILON),
        epsilon_r: a.eps_r.unwrap_or(DEFAULT_EPSILON),
    };
    let prefix = output_prefix(a.out.as_deref(), "protocol");
    Ok((params, prefix))
}

impl FidelityParams {
    pub fn config(&self, engine: Engine) -> SearchConfig {
        SearchConfig::new(self.n, self.k, 0.0)
            .with_gamma(self.gamma)
            .with_coupling(self.coupling)
            .with_marked(self.marked.clone())
            .with_window(self.t_max, self.points)
            .with_engine(engine)
    }
}

#[derive(Serialize)]
struct FidelityResult<'a> {
    optimum: Option<FidelityMaximum>,
    engine_gap: Option<f64>,
    series: &'a [FidelitySeries],
}

pub fn run_fidelity(p: &FidelityParams, prefix: &Path) -> CliResult<Outcome> {
    let csv = with_suffix(prefix, ".csv");
    let json = with_suffix(prefix, ".json");
    let manifest = RunManifest::new("fidelity", p, &[csv.clone(), json.clone()])?;

    let optimum = match p.gamma {
        GammaSpec::Optimize { .. } => Some(optimize_gamma(&p.config(p.engines[0]))?),
        GammaSpec::Fixed { .. } => None,
    };
    let fixed = match (optimum, p.gamma) {
        (Some(o), _) => GammaSpec::Fixed { value: o.gamma },
        (None, g) => g,
    };
    let series: Vec<FidelitySeries> = p
        .engines
        .iter()
        .map(|&e| fidelity_series(&p.config(e).with_gamma(fixed)))
        .collect::<Result<_, _>>()?;
    let engine_gap = (series.len() > 1).then(|| {
        series[1..]
            .iter()
            .flat_map(|s| {
                s.values
                    .iter()
                    .zip(&series[0].values)
                    .map(|(a, b)| (a - b).abs())
            })
            .fold(0.0, f64::max)
    });

    let mut meta: Metadata = manifest.metadata();
    if let (Some(o), GammaSpec::Optimize { lo, hi }) = (optimum, p.gamma) {
        meta.push((
            "gamma_range".into(),
            format!("{} {}", fmt_f64(lo), fmt_f64(hi)),
        ));
        meta.push(("gamma_optimal".into(), fmt_f64(o.gamma)));
        meta.push(("gamma_at_range_edge".into(), o.boundary.to_string()));
    }
    if let Some(g) = engine_gap {
        meta.push(("max_engine_gap".into(), fmt_f64(g)));
    }
    write_file(&csv, |w| match series.as_slice() {
        [one] => write_series_csv(w, one, &meta),
        many => write_overlay_csv(w, &many.iter().collect::<Vec<_>>(), &meta),
    })?;
    let result = FidelityResult {
        optimum,
        engine_gap,
        series: &series,
    };
    write_file(&json, |w| write_json(w, &manifest, "result", &result))?;

    let mut summary = Vec::new();
    if let Some(o) = optimum {
        let edge = if o.boundary {
            " (at the edge of the range)"
        } else {
            ""
        };
        summary.push(format!("optimal gamma = {:.6}{edge}", o.gamma));
    }
    for s in &series {
        summary.push(format!(
            "{}: max fidelity {:.6} at t = {:.4} (gamma = {})",
            s.meta.engine.tag(),
            s.peak_value,
            s.peak_time,
            fmt_f64(s.meta.gamma)
        ));
    }
    if let Some(g) = engine_gap {
        summary.push(format!("max |difference| between engines: {g:.2e}"));
    }
    Ok(Outcome {
        outputs: vec![csv, json],
        summary,
    })
}

pub fn run_asymptotic(p: &AsymptoticParams, prefix: &Path) -> CliResult<Outcome> {
    if p.kmax == 0 || p.points < 2 {
        return Err(CliError::Usage(
            "--kmax must be >= 1 and --points >= 2".into(),
        ));
    }
    let table_path = with_suffix(prefix, "_table.csv");
    let curves_path = with_suffix(prefix, "_curves.csv");
    let json = with_suffix(prefix, ".json");
    let manifest = RunManifest::new(
        "asymptotic",
        p,
        &[table_path.clone(), curves_path.clone(), json.clone()],
    )?;

    let table = asymptotic_table(p.kmax, p.tau_max)?;
    let dt = p.tau_max / (p.points - 1) as f64;
    let taus: Vec<f64> = (0..p.points).map(|i| i as f64 * dt).collect();
    let ks: Vec<usize> = (1..=p.kmax).collect();
    let curves: Vec<Vec<f64>> = ks
        .par_iter()
        .map(|&k| {
            let c = AsymptoticCurve::new(k)?;
            Ok(c.amplitude().probability_grid(0.0, dt, p.points))
        })
        .collect::<ksearch_core::Result<_>>()?;

    let meta = manifest.metadata();
    write_file(&table_path, |w| {
        write_asymptotic_table_csv(w, &table, &meta)
    })?;
    write_file(&curves_path, |w| {
        write_curves_csv(w, &taus, &ks, &curves, &meta)
    })?;
    write_file(&json, |w| write_json(w, &manifest, "table", &table))?;

    let summary = table
        .iter()
        .map(|r| {
            format!(
                "k = {:>3}: max fidelity {:.6} at t/sqrt(n) = {:.6}",
                r.k, r.fidelity, r.tau
            )
        })
        .collect();
    Ok(Outcome {
        outputs: vec![table_path, curves_path, json],
        summary,
    })
}

pub fn run_protocol(p: &ProtocolParams, prefix: &Path) -> CliResult<Outcome> {
    let csv = with_suffix(prefix, ".csv");
    let json = with_suffix(prefix, ".json");
    let manifest = RunManifest::new("protocol", p, &[csv.clone(), json.clone()])?;

    let mut rows = protocol_sweep(&p.ks, &p.ns, p.epsilon_s, p.epsilon_r)?;
    if p.large_n {
        let limit: Vec<ProtocolComparison> =
            p.ks.par_iter()
                .filter(|&&k| k >= 1)
                .map(|&k| asymptotic_comparison(k, p.epsilon_s, p.epsilon_r))
                .collect::<ksearch_core::Result<_>>()?;
        rows.extend(limit);
    }
    if rows.is_empty() {
        return Err(CliError::Usage(
            "no (k, n) pair with 1 <= k <= n/2 in the requested ranges".into(),
        ));
    }
    rows.sort_by_key(|r| (r.k, r.n.unwrap_or(usize::MAX)));

    let meta = manifest.metadata();
    write_file(&csv, |w| write_protocol_csv(w, &rows, &meta))?;
    write_file(&json, |w| write_json(w, &manifest, "rows", &rows))?;

    let summary = rows
        .iter()
        .map(|r| {
            let n = r.n.map_or("inf".to_string(), |n| n.to_string());
            format!(
                "k = {}, n = {n}: s_k = {}, r_k = {}, ratio {:.4}",
                r.k, r.s_k, r.r_k, r.ratio
            )
        })
        .collect();
    Ok(Outcome {
        outputs: vec![csv, json],
        summary,
    })
}

/// Re-runs the command recorded in a manifest, writing under `prefix`.
pub fn run_manifest(m: &RunManifest, prefix: &Path) -> CliResult<Outcome> {
    match m.command.as_str() {
        "fidelity" => run_fidelity(&m.params()?, prefix),
        "asymptotic" => run_asymptotic(&m.params()?, prefix),
        "protocol" => run_protocol(&m.params()?, prefix),
        "verify" => crate::verify::run_verify(&m.params()?, prefix).map(|(o, _)| o),
        other => Err(CliError::Format(format!(
            "unknown command `{other}` in manifest"
        ))),
    }
}
