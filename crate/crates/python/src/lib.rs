//! Python bindings: `import ksearch`.

use ksearch_core::evolve::auto_gamma_range as core_auto_gamma_range;
use ksearch_core::hamiltonian::{build_mark, build_search, build_walk};
use ksearch_core::protocols::{self, ProtocolComparison as CoreComparison};
use ksearch_core::reduced::{self, DEFAULT_TAU_MAX};
use ksearch_core::subspace::{self, BasisState};
use ksearch_core::{
    Coupling, Engine, Error, FidelityMaximum as CoreMaximum, FidelitySeries as CoreSeries,
    GammaSpec, SearchConfig,
};
use pyo3::exceptions::{PyArithmeticError, PyIndexError, PyValueError};
use pyo3::prelude::*;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::ConvergenceFailure(_) | Error::WindowTooSmall { .. } | Error::Diverges { .. } => {
            PyArithmeticError::new_err(e.to_string())
        }
        Error::NotInBasis(_) | Error::LengthMismatch(..) => PyIndexError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

trait IntoPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for ksearch_core::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

fn coupling(alpha: Option<f64>) -> Coupling {
    alpha.map_or(Coupling::AllToAll, |alpha| Coupling::LongRange { alpha })
}

fn engine(name: &str) -> PyResult<Engine> {
    match name {
        "reduced" => Ok(Engine::Reduced),
        "sparse" => Ok(Engine::Sparse),
        "brute-force" | "brute_force" => Ok(Engine::BruteForce),
        other => Err(PyValueError::new_err(format!(
            "engine must be 'reduced', 'sparse' or 'brute-force', got '{other}'"
        ))),
    }
}

#[allow(clippy::too_many_arguments)]
fn search_config(
    n: usize,
    k: usize,
    gamma: Option<f64>,
    gamma_range: Option<(f64, f64)>,
    alpha: Option<f64>,
    marked: Option<Vec<usize>>,
    t_max: Option<f64>,
    points: usize,
    engine_name: &str,
) -> PyResult<SearchConfig> {
    let spec = match (gamma, gamma_range) {
        (Some(value), None) => GammaSpec::Fixed { value },
        (None, Some((lo, hi))) => GammaSpec::Optimize { lo, hi },
        _ => {
            return Err(PyValueError::new_err(
                "pass exactly one of gamma or gamma_range",
            ))
        }
    };
    let mut cfg = SearchConfig::new(n, k, 0.0)
        .with_gamma(spec)
        .with_coupling(coupling(alpha))
        .with_engine(engine(engine_name)?);
    if let Some(m) = marked {
        cfg = cfg.with_marked(m);
    }
    cfg.t_max = t_max;
    cfg.grid_points = points;
    Ok(cfg)
}

#[pyclass(module = "ksearch", frozen)]
struct FidelitySeries {
    #[pyo3(get)]
    n: usize,
    #[pyo3(get)]
    k: usize,
    #[pyo3(get)]
    gamma: f64,
    #[pyo3(get)]
    marked: Vec<usize>,
    #[pyo3(get)]
    engine: String,
    #[pyo3(get)]
    times: Vec<f64>,
    #[pyo3(get)]
    values: Vec<f64>,
    #[pyo3(get)]
    peak_value: f64,
    #[pyo3(get)]
    peak_time: f64,
    #[pyo3(get)]
    boundary: bool,
}

impl From<CoreSeries> for FidelitySeries {
    fn from(s: CoreSeries) -> Self {
        Self {
            n: s.meta.n,
            k: s.meta.k,
            gamma: s.meta.gamma,
            marked: s.meta.marked,
            engine: s.meta.engine.tag().into(),
            times: s.times,
            values: s.values,
            peak_value: s.peak_value,
            peak_time: s.peak_time,
            boundary: s.boundary,
        }
    }
}

#[pymethods]
impl FidelitySeries {
    fn __len__(&self) -> usize {
        self.times.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "FidelitySeries(n={}, k={}, gamma={}, engine='{}', peak_value={:.6}, peak_time={:.4})",
            self.n, self.k, self.gamma, self.engine, self.peak_value, self.peak_time
        )
    }
}

#[pyclass(module = "ksearch", frozen)]
struct FidelityMaximum {
    #[pyo3(get)]
    gamma: f64,
    #[pyo3(get)]
    value: f64,
    #[pyo3(get)]
    time: f64,
    #[pyo3(get)]
    boundary: bool,
}

impl From<CoreMaximum> for FidelityMaximum {
    fn from(m: CoreMaximum) -> Self {
        Self {
            gamma: m.gamma,
            value: m.value,
            time: m.time,
            boundary: m.boundary,
        }
    }
}

#[pymethods]
impl FidelityMaximum {
    fn __repr__(&self) -> String {
        format!(
            "FidelityMaximum(gamma={}, value={}, time={}, boundary={})",
            self.gamma, self.value, self.time, self.boundary
        )
    }
}

#[pyclass(module = "ksearch", frozen)]
struct ProtocolComparison {
    inner: CoreComparison,
}

#[pymethods]
impl ProtocolComparison {
    #[getter]
    fn k(&self) -> usize {
        self.inner.k
    }
    #[getter]
    fn n(&self) -> Option<usize> {
        self.inner.n
    }
    #[getter]
    fn states(&self) -> Option<u64> {
        self.inner.states()
    }
    #[getter]
    fn s_k(&self) -> u64 {
        self.inner.s_k
    }
    #[getter]
    fn r_single(&self) -> u64 {
        self.inner.r_single
    }
    #[getter]
    fn r_k(&self) -> u64 {
        self.inner.r_k
    }
    #[getter]
    fn f_single(&self) -> f64 {
        self.inner.f_single
    }
    #[getter]
    fn f_ksub(&self) -> f64 {
        self.inner.f_ksub
    }
    #[getter]
    fn t_1subspace(&self) -> f64 {
        self.inner.t_1subspace
    }
    #[getter]
    fn t_ksubspace(&self) -> f64 {
        self.inner.t_ksubspace
    }
    #[getter]
    fn ratio(&self) -> f64 {
        self.inner.ratio
    }

    fn __repr__(&self) -> String {
        let n = self.inner.n.map_or("inf".into(), |n| n.to_string());
        format!(
            "ProtocolComparison(k={}, n={n}, s_k={}, r_k={}, ratio={:.4})",
            self.inner.k, self.inner.s_k, self.inner.r_k, self.inner.ratio
        )
    }
}

/// Weight-k strings on n spins in ascending integer order.
#[pyclass(module = "ksearch", frozen)]
struct SubspaceBasis {
    inner: subspace::SubspaceBasis,
}

#[pymethods]
impl SubspaceBasis {
    #[new]
    fn new(n: usize, k: usize) -> PyResult<Self> {
        Ok(Self {
            inner: subspace::SubspaceBasis::new(n, k).py()?,
        })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.k()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    /// Position of the string with ones on the given 1-based sites.
    fn rank(&self, sites: Vec<usize>) -> PyResult<usize> {
        let s = BasisState::from_sites(&sites, self.inner.n()).py()?;
        self.inner.rank(&s).py()
    }

    /// 1-based occupied sites of the string at `rank`.
    fn unrank(&self, rank: usize) -> PyResult<Vec<usize>> {
        Ok(self.inner.unrank(rank).py()?.sites())
    }

    /// Bit strings, spin 1 rightmost.
    fn states(&self) -> Vec<String> {
        self.inner.iter().map(|s| s.to_string()).collect()
    }

    /// Number of strings at Johnson distance q from the marked string, q = 0..=k.
    fn distance_class_sizes(&self, marked: Vec<usize>) -> PyResult<Vec<u64>> {
        let w = BasisState::from_sites(&marked, self.inner.n()).py()?;
        Ok(self.inner.distance_classes(&w).py()?.sizes)
    }

    fn __repr__(&self) -> String {
        format!(
            "SubspaceBasis(n={}, k={}, len={})",
            self.inner.n(),
            self.inner.k(),
            self.inner.len()
        )
    }
}

#[pyfunction]
fn binomial(n: usize, k: usize) -> u64 {
    subspace::binomial(n, k)
}

#[pyfunction]
fn class_size(n: usize, k: usize, q: usize) -> u64 {
    subspace::class_size(n, k, q)
}

/// Dense `γ H_walk + H_mark` on the weight-k sector, rows in basis order.
#[pyfunction]
#[pyo3(signature = (n, k, gamma, marked=None, alpha=None))]
fn search_hamiltonian(
    n: usize,
    k: usize,
    gamma: f64,
    marked: Option<Vec<usize>>,
    alpha: Option<f64>,
) -> PyResult<Vec<Vec<f64>>> {
    let basis = subspace::SubspaceBasis::new(n, k).py()?;
    let marked = marked.unwrap_or_else(|| (1..=k).collect());
    let j = coupling(alpha).matrix(n).py()?;
    let h = build_search(
        &build_walk(&basis, &j).py()?,
        &build_mark(&basis, &marked).py()?,
        gamma,
    )
    .py()?;
    let d = h.to_dense();
    Ok((0..d.nrows())
        .map(|r| d.row(r).iter().copied().collect())
        .collect())
}

/// `(diag, offdiag)` of the (k+1)-dimensional tridiagonal reduction.
#[pyfunction]
fn reduced_hamiltonian(n: usize, k: usize, gamma: f64) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let h = reduced::build_reduced(n, k, gamma).py()?;
    Ok((h.diag, h.offdiag))
}

#[pyfunction]
fn asymptotic_fidelity(k: usize, tau: f64) -> PyResult<f64> {
    reduced::asymptotic_fidelity(k, tau).py()
}

/// `(F*, τ*)` at the principal maximum on `[0, tau_max]`.
#[pyfunction]
#[pyo3(signature = (k, tau_max=DEFAULT_TAU_MAX))]
fn max_asymptotic(k: usize, tau_max: f64) -> PyResult<(f64, f64)> {
    let m = reduced::max_asymptotic(k, tau_max).py()?;
    Ok((m.fidelity, m.tau))
}

/// `[(k, F*, τ*)]` for k = 1..=kmax.
#[pyfunction]
#[pyo3(signature = (kmax, tau_max=DEFAULT_TAU_MAX))]
fn asymptotic_table(kmax: usize, tau_max: f64) -> PyResult<Vec<(usize, f64, f64)>> {
    let rows = reduced::asymptotic_table(kmax, tau_max).py()?;
    Ok(rows.into_iter().map(|r| (r.k, r.fidelity, r.tau)).collect())
}

#[pyfunction]
#[pyo3(signature = (n, k, gamma=None, gamma_range=None, alpha=None, marked=None, t_max=None, points=2000, engine="sparse"))]
#[allow(clippy::too_many_arguments)]
fn fidelity_series(
    py: Python<'_>,
    n: usize,
    k: usize,
    gamma: Option<f64>,
    gamma_range: Option<(f64, f64)>,
    alpha: Option<f64>,
    marked: Option<Vec<usize>>,
    t_max: Option<f64>,
    points: usize,
    engine: &str,
) -> PyResult<FidelitySeries> {
    let cfg = search_config(
        n,
        k,
        gamma,
        gamma_range,
        alpha,
        marked,
        t_max,
        points,
        engine,
    )?;
    let s = py.detach(|| ksearch_core::fidelity_series(&cfg)).py()?;
    Ok(s.into())
}

/// Refined maximum over the window; with `gamma_range` the hopping rate is
/// optimised as well.
#[pyfunction]
#[pyo3(signature = (n, k, gamma=None, gamma_range=None, alpha=None, marked=None, t_max=None, points=2000, engine="sparse"))]
#[allow(clippy::too_many_arguments)]
fn max_fidelity(
    py: Python<'_>,
    n: usize,
    k: usize,
    gamma: Option<f64>,
    gamma_range: Option<(f64, f64)>,
    alpha: Option<f64>,
    marked: Option<Vec<usize>>,
    t_max: Option<f64>,
    points: usize,
    engine: &str,
) -> PyResult<FidelityMaximum> {
    let cfg = search_config(
        n,
        k,
        gamma,
        gamma_range,
        alpha,
        marked,
        t_max,
        points,
        engine,
    )?;
    let m = py.detach(|| ksearch_core::max_fidelity(&cfg)).py()?;
    Ok(m.into())
}

#[pyfunction]
#[pyo3(signature = (n, alpha=None))]
fn auto_gamma_range(n: usize, alpha: Option<f64>) -> PyResult<(f64, f64)> {
    core_auto_gamma_range(n, &coupling(alpha)).py()
}

#[pyfunction]
fn expected_trials(k: usize) -> PyResult<f64> {
    protocols::expected_trials(k).py()
}

#[pyfunction]
fn coverage_tail(k: usize, s: u64) -> PyResult<f64> {
    protocols::coverage_tail(k, s).py()
}

#[pyfunction]
fn min_trials_s(k: usize, epsilon_s: f64) -> PyResult<u64> {
    protocols::min_trials_s(k, epsilon_s).py()
}

#[pyfunction]
fn min_repeats_r(f: f64, epsilon_r: f64) -> PyResult<u64> {
    protocols::min_repeats_r(f, epsilon_r).py()
}

#[pyfunction]
#[pyo3(signature = (k, epsilon_s=0.005, epsilon_r=0.005))]
fn asymptotic_comparison(k: usize, epsilon_s: f64, epsilon_r: f64) -> PyResult<ProtocolComparison> {
    let inner = protocols::asymptotic_comparison(k, epsilon_s, epsilon_r).py()?;
    Ok(ProtocolComparison { inner })
}

#[pyfunction]
#[pyo3(signature = (n, k, epsilon_s=0.005, epsilon_r=0.005))]
fn finite_comparison(
    py: Python<'_>,
    n: usize,
    k: usize,
    epsilon_s: f64,
    epsilon_r: f64,
) -> PyResult<ProtocolComparison> {
    let inner = py
        .detach(|| protocols::finite_comparison(n, k, epsilon_s, epsilon_r))
        .py()?;
    Ok(ProtocolComparison { inner })
}

#[pymodule]
fn ksearch(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("DEFAULT_TAU_MAX", DEFAULT_TAU_MAX)?;
    m.add_class::<SubspaceBasis>()?;
    m.add_class::<FidelitySeries>()?;
    m.add_class::<FidelityMaximum>()?;
    m.add_class::<ProtocolComparison>()?;
    m.add_function(wrap_pyfunction!(binomial, m)?)?;
    m.add_function(wrap_pyfunction!(class_size, m)?)?;
    m.add_function(wrap_pyfunction!(search_hamiltonian, m)?)?;
    m.add_function(wrap_pyfunction!(reduced_hamiltonian, m)?)?;
    m.add_function(wrap_pyfunction!(asymptotic_fidelity, m)?)?;
    m.add_function(wrap_pyfunction!(max_asymptotic, m)?)?;
    m.add_function(wrap_pyfunction!(asymptotic_table, m)?)?;
    m.add_function(wrap_pyfunction!(fidelity_series, m)?)?;
    m.add_function(wrap_pyfunction!(max_fidelity, m)?)?;
    m.add_function(wrap_pyfunction!(auto_gamma_range, m)?)?;
    m.add_function(wrap_pyfunction!(expected_trials, m)?)?;
    m.add_function(wrap_pyfunction!(coverage_tail, m)?)?;
    m.add_function(wrap_pyfunction!(min_trials_s, m)?)?;
    m.add_function(wrap_pyfunction!(min_repeats_r, m)?)?;
    m.add_function(wrap_pyfunction!(asymptotic_comparison, m)?)?;
    m.add_function(wrap_pyfunction!(finite_comparison, m)?)?;
    Ok(())
}
