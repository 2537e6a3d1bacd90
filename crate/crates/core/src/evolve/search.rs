use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::brute::BruteForceSector;
use super::propagate::{propagate_with, KrylovOptions, Method, DENSE_LIMIT};
use crate::error::{Error, Result};
use crate::hamiltonian::{
    build_mark, build_search, build_walk, long_range_couplings, CouplingMatrix, SparseHamiltonian,
};
use crate::linesearch::{golden_section_max, refine_peak, select_peak, PeakRule};
use crate::reduced::{build_reduced, initial_reduced_state};
use crate::spectral::{PhaseSum, Spectrum};
use crate::subspace::{BasisState, SubspaceBasis};

pub const DEFAULT_GRID_POINTS: usize = 2000;

/// Number of log-spaced hopping rates in the coarse scan of
/// [`optimize_gamma`].
pub const GAMMA_SCAN_POINTS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Coupling {
    AllToAll,
    LongRange { alpha: f64 },
}

impl Coupling {
    pub fn matrix(&self, n: usize) -> Result<CouplingMatrix> {
        match *self {
            Coupling::AllToAll => Ok(CouplingMatrix::all_to_all(n)),
            Coupling::LongRange { alpha } => long_range_couplings(n, alpha),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GammaSpec {
    Fixed { value: f64 },
    Optimize { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Engine {
    Reduced,
    Sparse,
    BruteForce,
}

impl Engine {
    pub fn tag(&self) -> &'static str {
        match self {
            Engine::Reduced => "reduced",
            Engine::Sparse => "sparse",
            Engine::BruteForce => "brute-force",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub n: usize,
    pub k: usize,
    /// 1-based marked sites; `None` means `1..=k`.
    pub marked: Option<Vec<usize>>,
    pub coupling: Coupling,
    pub gamma: GammaSpec,
    /// End of the time window; `None` means `10√n`.
    pub t_max: Option<f64>,
    pub grid_points: usize,
    pub engine: Engine,
    /// Sector dimension up to which the sparse engine diagonalises densely.
    pub dense_limit: usize,
    pub peak_rule: PeakRule,
}

impl SearchConfig {
    pub fn new(n: usize, k: usize, gamma: f64) -> Self {
        Self {
            n,
            k,
            marked: None,
            coupling: Coupling::AllToAll,
            gamma: GammaSpec::Fixed { value: gamma },
            t_max: None,
            grid_points: DEFAULT_GRID_POINTS,
            engine: Engine::Sparse,
            dense_limit: DENSE_LIMIT,
            peak_rule: PeakRule::FirstPrincipal,
        }
    }

    pub fn with_engine(mut self, engine: Engine) -> Self {
        self.engine = engine;
        self
    }

    pub fn with_coupling(mut self, coupling: Coupling) -> Self {
        self.coupling = coupling;
        self
    }

    pub fn with_gamma(mut self, gamma: GammaSpec) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_marked(mut self, marked: Vec<usize>) -> Self {
        self.marked = Some(marked);
        self
    }

    pub fn with_window(mut self, t_max: f64, grid_points: usize) -> Self {
        self.t_max = Some(t_max);
        self.grid_points = grid_points;
        self
    }

    pub fn marked_sites(&self) -> Vec<usize> {
        self.marked
            .clone()
            .unwrap_or_else(|| (1..=self.k).collect())
    }

    pub fn window(&self) -> f64 {
        self.t_max.unwrap_or(10.0 * (self.n as f64).sqrt())
    }

    pub fn times(&self) -> Vec<f64> {
        let t_max = self.window();
        let m = self.grid_points;
        (0..m).map(|i| t_max * i as f64 / (m - 1) as f64).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.k == 0 || self.k > self.n {
            return Err(Error::InvalidArgs(format!(
                "need 1 <= k <= n, got n = {}, k = {}",
                self.n, self.k
            )));
        }
        let marked = self.marked_sites();
        if marked.len() != self.k {
            return Err(Error::WrongMarkCount {
                expected: self.k,
                found: marked.len(),
            });
        }
        let mut sorted = marked.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != marked.len() || sorted.iter().any(|&m| m == 0 || m > self.n) {
            return Err(Error::InvalidArgs(format!(
                "marked sites {marked:?} must be distinct and within 1..={}",
                self.n
            )));
        }
        let t_max = self.window();
        if !(t_max > 0.0 && t_max.is_finite()) {
            return Err(Error::InvalidArgs(format!(
                "time window must be positive, got {t_max}"
            )));
        }
        if self.grid_points < 2 {
            return Err(Error::InvalidArgs(
                "time grid needs at least 2 points".into(),
            ));
        }
        match self.gamma {
            GammaSpec::Fixed { value } if !(value >= 0.0 && value.is_finite()) => {
                return Err(Error::InvalidArgs(format!("invalid hopping rate {value}")));
            }
            GammaSpec::Optimize { lo, hi } if !(lo > 0.0 && hi >= lo && hi.is_finite()) => {
                return Err(Error::InvalidArgs(format!(
                    "hopping-rate range must satisfy 0 < lo <= hi, got [{lo}, {hi}]"
                )));
            }
            _ => {}
        }
        if self.engine == Engine::Reduced && self.coupling != Coupling::AllToAll {
            return Err(Error::EngineMismatch);
        }
        if let Coupling::LongRange { alpha } = self.coupling {
            if !(alpha >= 0.0 && alpha.is_finite()) {
                return Err(Error::InvalidArgs(format!("invalid alpha {alpha}")));
            }
        }
        Ok(())
    }
}

/// Default hopping-rate search range `[0.1/s, 10/s]`, where `s` is the mean
/// row sum of the coupling matrix (`n - 1` for all-to-all).
pub fn auto_gamma_range(n: usize, coupling: &Coupling) -> Result<(f64, f64)> {
    if n < 2 {
        return Err(Error::InvalidArgs(format!(
            "need at least 2 spins, got {n}"
        )));
    }
    let s = match coupling {
        Coupling::AllToAll => (n - 1) as f64,
        Coupling::LongRange { .. } => {
            let j = coupling.matrix(n)?;
            (0..n)
                .flat_map(|p| (0..n).filter(move |&q| q != p).map(move |q| (p, q)))
                .map(|(p, q)| j.get(p, q))
                .sum::<f64>()
                / n as f64
        }
    };
    Ok((0.1 / s, 10.0 / s))
}

/// Equal superposition over the basis.
pub fn uniform_state(basis: &SubspaceBasis) -> Vec<Complex64> {
    let a = 1.0 / (basis.len() as f64).sqrt();
    vec![Complex64::new(a, 0.0); basis.len()]
}

fn real_to_complex(v: &[f64]) -> Vec<Complex64> {
    v.iter().map(|&x| Complex64::new(x, 0.0)).collect()
}

/// `t ↦ |⟨w|e^{-iHt}|s_k⟩|²` for one concrete Hamiltonian.
pub enum FidelityModel {
    Spectral(PhaseSum),
    Krylov {
        h: SparseHamiltonian,
        psi0: Vec<Complex64>,
        target: usize,
        opts: KrylovOptions,
    },
}

impl FidelityModel {
    pub fn build(config: &SearchConfig, gamma: f64) -> Result<Self> {
        config.validate()?;
        let marked = config.marked_sites();
        match config.engine {
            Engine::Reduced => {
                let h = build_reduced(config.n, config.k, gamma)?;
                let psi0 = real_to_complex(&initial_reduced_state(config.n, config.k)?);
                Ok(Self::Spectral(h.spectrum().amplitude(0, &psi0)))
            }
            Engine::Sparse => {
                let basis = SubspaceBasis::new(config.n, config.k)?;
                let j = config.coupling.matrix(config.n)?;
                let h = build_search(
                    &build_walk(&basis, &j)?,
                    &build_mark(&basis, &marked)?,
                    gamma,
                )?;
                let psi0 = uniform_state(&basis);
                let target = basis.rank(&BasisState::from_sites(&marked, config.n)?)?;
                if h.dim() <= config.dense_limit {
                    Ok(Self::Spectral(
                        Spectrum::new(h.to_dense()).amplitude(target, &psi0),
                    ))
                } else {
                    Ok(Self::Krylov {
                        h,
                        psi0,
                        target,
                        opts: KrylovOptions::default(),
                    })
                }
            }
            Engine::BruteForce => {
                let j = config.coupling.matrix(config.n)?;
                let sector = BruteForceSector::new(config.n, config.k, &marked, &j, gamma)?;
                let w = BasisState::from_sites(&marked, config.n)?;
                let target = sector
                    .index_of(w.bits())
                    .expect("marked string has weight k");
                let d = sector.states.len();
                let psi0 = vec![Complex64::new(1.0 / (d as f64).sqrt(), 0.0); d];
                Ok(Self::Spectral(
                    Spectrum::new(sector.matrix).amplitude(target, &psi0),
                ))
            }
        }
    }

    pub fn fidelity_at(&self, t: f64) -> Result<f64> {
        match self {
            Self::Spectral(a) => Ok(a.probability(t)),
            Self::Krylov {
                h,
                psi0,
                target,
                opts,
            } => Ok(propagate_with(h, psi0, t, Method::Krylov(*opts))?[*target].norm_sqr()),
        }
    }

    /// Fidelity evaluator for times near `anchor`; Krylov models propagate
    /// to the anchor once and step from there.
    pub fn near(&self, anchor: f64) -> Result<Box<dyn Fn(f64) -> Result<f64> + '_>> {
        match self {
            Self::Spectral(a) => Ok(Box::new(move |t| Ok(a.probability(t)))),
            Self::Krylov {
                h,
                psi0,
                target,
                opts,
            } => {
                let base = propagate_with(h, psi0, anchor, Method::Krylov(*opts))?;
                Ok(Box::new(move |t| {
                    let psi = propagate_with(h, &base, t - anchor, Method::Krylov(*opts))?;
                    Ok(psi[*target].norm_sqr())
                }))
            }
        }
    }

    /// Fidelity on a uniform grid `i·dt`, `i in 0..count`.
    pub fn fidelity_grid(&self, dt: f64, count: usize) -> Result<Vec<f64>> {
        match self {
            Self::Spectral(a) => Ok(a.probability_grid(0.0, dt, count)),
            Self::Krylov {
                h,
                psi0,
                target,
                opts,
            } => {
                let mut out = Vec::with_capacity(count);
                let mut psi = psi0.clone();
                out.push(psi[*target].norm_sqr());
                for _ in 1..count {
                    psi = propagate_with(h, &psi, dt, Method::Krylov(*opts))?;
                    out.push(psi[*target].norm_sqr());
                }
                Ok(out)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesMeta {
    pub n: usize,
    pub k: usize,
    pub gamma: f64,
    pub coupling: Coupling,
    pub marked: Vec<usize>,
    pub engine: Engine,
}

/// Sampled fidelity curve. `max_value`/`argmax_time` refer to the selected
/// grid sample; `peak_value`/`peak_time` to its refinement between samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelitySeries {
    pub meta: SeriesMeta,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub max_value: f64,
    pub argmax_time: f64,
    pub peak_value: f64,
    pub peak_time: f64,
    /// Selected maximum lies on an edge of the time window.
    pub boundary: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FidelityMaximum {
    pub gamma: f64,
    pub value: f64,
    pub time: f64,
    pub boundary: bool,
}

fn series_at(config: &SearchConfig, gamma: f64) -> Result<FidelitySeries> {
    let model = FidelityModel::build(config, gamma)?;
    let times = config.times();
    let dt = times[1] - times[0];
    let mut values = model.fidelity_grid(dt, times.len())?;
    for v in values.iter_mut() {
        *v = v.clamp(0.0, 1.0);
    }
    let idx = select_peak(&values, config.peak_rule).expect("grid has >= 2 points");
    let mut err = None;
    let tol = 1e-9 * config.window();
    let eval = model.near(times[idx.saturating_sub(1)])?;
    let (peak_time, peak_value) = refine_peak(
        |t| match eval(t) {
            Ok(f) => f,
            Err(e) => {
                err.get_or_insert(e);
                f64::NEG_INFINITY
            }
        },
        &times,
        &values,
        idx,
        tol,
    );
    if let Some(e) = err {
        return Err(e);
    }
    Ok(FidelitySeries {
        meta: SeriesMeta {
            n: config.n,
            k: config.k,
            gamma,
            coupling: config.coupling,
            marked: config.marked_sites(),
            engine: config.engine,
        },
        max_value: values[idx],
        argmax_time: times[idx],
        peak_value: peak_value.clamp(0.0, 1.0),
        peak_time,
        boundary: idx == 0 || idx + 1 == times.len(),
        times,
        values,
    })
}

/// Fidelity on the configured time grid. With an optimisation range the
/// series is produced at the optimal hopping rate.
pub fn fidelity_series(config: &SearchConfig) -> Result<FidelitySeries> {
    config.validate()?;
    match config.gamma {
        GammaSpec::Fixed { value } => series_at(config, value),
        GammaSpec::Optimize { .. } => {
            let best = optimize_gamma(config)?;
            series_at(config, best.gamma)
        }
    }
}

/// Maximum of the fidelity over the window at a given hopping rate, refined
/// between grid samples.
pub fn max_fidelity_at(config: &SearchConfig, gamma: f64) -> Result<FidelityMaximum> {
    let s = series_at(config, gamma)?;
    Ok(FidelityMaximum {
        gamma,
        value: s.peak_value,
        time: s.peak_time,
        boundary: s.boundary,
    })
}

pub fn max_fidelity(config: &SearchConfig) -> Result<FidelityMaximum> {
    config.validate()?;
    match config.gamma {
        GammaSpec::Fixed { value } => max_fidelity_at(config, value),
        GammaSpec::Optimize { .. } => optimize_gamma(config),
    }
}

/// Hopping rate maximising [`max_fidelity`]: 32-point log-spaced scan, then
/// golden-section refinement in `log γ` to relative `1e-4`. `boundary` flags
/// an optimum within 1% of either end of the range.
pub fn optimize_gamma(config: &SearchConfig) -> Result<FidelityMaximum> {
    config.validate()?;
    let (lo, hi) = match config.gamma {
        GammaSpec::Optimize { lo, hi } => (lo, hi),
        GammaSpec::Fixed { value } => (value, value),
    };
    if lo.is_nan() || lo <= 0.0 || lo == hi {
        return max_fidelity_at(config, lo);
    }
    let (llo, lhi) = (lo.ln(), hi.ln());
    let m = GAMMA_SCAN_POINTS;
    let grid: Vec<f64> = (0..m)
        .map(|i| llo + (lhi - llo) * i as f64 / (m - 1) as f64)
        .collect();
    let scan: Vec<FidelityMaximum> = grid
        .par_iter()
        .map(|&lg| max_fidelity_at(config, lg.exp()))
        .collect::<Result<_>>()?;
    let best = (0..m).fold(0, |b, i| if scan[i].value > scan[b].value { i } else { b });
    let a = grid[best.saturating_sub(1)];
    let b = grid[(best + 1).min(m - 1)];
    let mut err = None;
    let (lg, _) = golden_section_max(
        |lg| match max_fidelity_at(config, lg.exp()) {
            Ok(r) => r.value,
            Err(e) => {
                err.get_or_insert(e);
                f64::NEG_INFINITY
            }
        },
        a,
        b,
        1e-4,
    );
    if let Some(e) = err {
        return Err(e);
    }
    let mut result = max_fidelity_at(config, lg.exp())?;
    if scan[best].value > result.value {
        result = scan[best];
    }
    let g = result.gamma;
    result.boundary = (g / lo - 1.0).abs() < 0.01 || (g / hi - 1.0).abs() < 0.01;
    Ok(result)
}
