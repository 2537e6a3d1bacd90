//! Exact (k+1)-dimensional search dynamics and its large-n limit.
//!
//! Starting from the uniform superposition, the search Hamiltonian never
//! leaves the span of `|w⟩, |d_1⟩, …, |d_k⟩`, where `|d_q⟩` is the uniform
//! superposition over states at graph distance `q` from the marked string.
//! In that frame the Hamiltonian is tridiagonal with (1-based `j`)
//!
//! ```text
//! H_jj     = γ (j-1)(n+2-2j) + k/2 + 1 - j
//! H_j,j+1  = γ j √(k+1-j) √(n+1-k-j)
//! ```
//!
//! With `γ = 1/n` and time rescaled as `τ = t/√n`, the dynamics tends to the
//! zero-diagonal tridiagonal generator `R_k` with off-diagonal `j√(k+1-j)`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::SparseHamiltonian;
use crate::linesearch::{refine_peak, select_peak, PeakRule};
use crate::spectral::{PhaseSum, Spectrum};
use crate::subspace::{class_size_f64, intersection_count, DistanceClassTable};

fn check_nk(n: usize, k: usize) -> Result<()> {
    if k < 1 || 2 * k > n {
        return Err(Error::InvalidArgs(format!(
            "reduced dynamics needs 1 <= k <= n/2, got n = {n}, k = {k}; \
             for k > n/2 flip all spins and solve the (n, n-k) problem"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedHamiltonian {
    pub n: usize,
    pub k: usize,
    pub gamma: f64,
    pub diag: Vec<f64>,
    pub offdiag: Vec<f64>,
}

pub fn build_reduced(n: usize, k: usize, gamma: f64) -> Result<ReducedHamiltonian> {
    check_nk(n, k)?;
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidArgs(format!(
            "hopping rate must be finite and non-negative, got {gamma}"
        )));
    }
    let (nf, kf) = (n as f64, k as f64);
    let diag = (1..=k + 1)
        .map(|j| {
            let j = j as f64;
            gamma * (j - 1.0) * (nf + 2.0 - 2.0 * j) + kf / 2.0 + 1.0 - j
        })
        .collect();
    let offdiag = (1..=k)
        .map(|j| {
            let j = j as f64;
            gamma * j * (kf + 1.0 - j).sqrt() * (nf + 1.0 - kf - j).sqrt()
        })
        .collect();
    Ok(ReducedHamiltonian {
        n,
        k,
        gamma,
        diag,
        offdiag,
    })
}

impl ReducedHamiltonian {
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let d = self.dim();
        let mut m = DMatrix::zeros(d, d);
        for i in 0..d {
            m[(i, i)] = self.diag[i];
        }
        for (i, &b) in self.offdiag.iter().enumerate() {
            m[(i, i + 1)] = b;
            m[(i + 1, i)] = b;
        }
        m
    }

    pub fn spectrum(&self) -> Spectrum {
        Spectrum::tridiagonal(&self.diag, &self.offdiag)
    }
}

/// The same frame matrix assembled from class-intersection counts: the
/// walk element between classes `i-1` and `j-1` is the number of neighbours
/// a class-`(i-1)` state has in class `j-1`, scaled by `√(d_{i-1}/d_{j-1})`.
pub fn reduced_from_intersections(n: usize, k: usize, gamma: f64) -> Result<DMatrix<f64>> {
    check_nk(n, k)?;
    let d = k + 1;
    let mut m = DMatrix::zeros(d, d);
    for i in 1..=d {
        for j in 1..=d {
            let count = intersection_count(n, k, i, j)? as f64;
            if count == 0.0 {
                continue;
            }
            let ratio = class_size_f64(n, k, i - 1) / class_size_f64(n, k, j - 1);
            m[(i - 1, j - 1)] = gamma * ratio.sqrt() * count;
        }
        m[(i - 1, i - 1)] += k as f64 / 2.0 + 1.0 - i as f64;
    }
    Ok(m)
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Projects a sector operator onto the normalised distance-class states.
pub fn project_onto_classes(h: &SparseHamiltonian, table: &DistanceClassTable) -> DMatrix<f64> {
    let kp1 = table.classes.len();
    let mut class_of = vec![0usize; h.dim()];
    for (q, members) in table.classes.iter().enumerate() {
        for &r in members {
            class_of[r] = q;
        }
    }
    let mut sums = vec![CompensatedSum::default(); kp1 * kp1];
    for r in 0..h.dim() {
        let p = class_of[r];
        sums[p * kp1 + p].add(h.diag()[r]);
        for (c, v) in h.row(r) {
            sums[p * kp1 + class_of[c]].add(v);
        }
    }
    DMatrix::from_fn(kp1, kp1, |p, q| {
        let norm = (table.sizes[p] as f64 * table.sizes[q] as f64).sqrt();
        if norm > 0.0 {
            sums[p * kp1 + q].value() / norm
        } else {
            0.0
        }
    })
}

/// Uniform superposition expressed in the class frame:
/// component `q` is `√(d_q / C(n, k))`.
pub fn initial_reduced_state(n: usize, k: usize) -> Result<Vec<f64>> {
    check_nk(n, k)?;
    let sizes: Vec<f64> = (0..=k).map(|q| class_size_f64(n, k, q)).collect();
    let total: f64 = sizes.iter().sum();
    Ok(sizes.iter().map(|d| (d / total).sqrt()).collect())
}

/// Large-n limit of [`initial_reduced_state`]: all weight on `|d_k⟩`.
pub fn asymptotic_initial_state(k: usize) -> Vec<f64> {
    let mut v = vec![0.0; k + 1];
    v[k] = 1.0;
    v
}

/// `R_k`: zero diagonal, off-diagonal `j√(k-j+1)` for `j = 1..=k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticMatrix {
    pub k: usize,
    pub offdiag: Vec<f64>,
}

pub fn build_rk(k: usize) -> Result<AsymptoticMatrix> {
    if k < 1 {
        return Err(Error::InvalidArgs("R_k needs k >= 1".into()));
    }
    let offdiag = (1..=k)
        .map(|j| j as f64 * ((k - j + 1) as f64).sqrt())
        .collect();
    Ok(AsymptoticMatrix { k, offdiag })
}

impl AsymptoticMatrix {
    pub fn to_dense(&self) -> DMatrix<f64> {
        let d = self.k + 1;
        let mut m = DMatrix::zeros(d, d);
        for (i, &b) in self.offdiag.iter().enumerate() {
            m[(i, i + 1)] = b;
            m[(i + 1, i)] = b;
        }
        m
    }

    pub fn spectrum(&self) -> Spectrum {
        Spectrum::tridiagonal(&vec![0.0; self.k + 1], &self.offdiag)
    }
}

/// Transfer amplitude `τ ↦ ⟨1| e^{-i R_k τ} |k+1⟩`, diagonalised once.
#[derive(Debug, Clone)]
pub struct AsymptoticCurve {
    pub k: usize,
    amplitude: PhaseSum,
}

impl AsymptoticCurve {
    pub fn new(k: usize) -> Result<Self> {
        let rk = build_rk(k)?;
        let start: Vec<Complex64> = asymptotic_initial_state(k)
            .into_iter()
            .map(|x| Complex64::new(x, 0.0))
            .collect();
        Ok(Self {
            k,
            amplitude: rk.spectrum().amplitude(0, &start),
        })
    }

    pub fn fidelity(&self, tau: f64) -> f64 {
        self.amplitude.probability(tau)
    }

    pub fn amplitude(&self) -> &PhaseSum {
        &self.amplitude
    }
}

pub fn asymptotic_fidelity(k: usize, tau: f64) -> Result<f64> {
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(Error::InvalidArgs(format!(
            "tau must be finite and >= 0, got {tau}"
        )));
    }
    Ok(AsymptoticCurve::new(k)?.fidelity(tau))
}

/// `(2/9)(cos(√6 τ) - 1)²`, the `(1,3)` entry of `e^{-i R_2 τ}` squared.
pub fn closed_form_f2(tau: f64) -> f64 {
    let c = (6f64.sqrt() * tau).cos() - 1.0;
    2.0 / 9.0 * c * c
}

/// `(2/73)(√(10+√73) sin(√(10-√73) τ) - √(10-√73) sin(√(10+√73) τ))²`.
pub fn closed_form_f3(tau: f64) -> f64 {
    let r73 = 73f64.sqrt();
    let fast = (10.0 + r73).sqrt();
    let slow = (10.0 - r73).sqrt();
    let x = fast * (slow * tau).sin() - slow * (fast * tau).sin();
    2.0 / 73.0 * x * x
}

/// Default rescaled-time window for [`max_asymptotic`].
pub const DEFAULT_TAU_MAX: f64 = 4.0 * std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticMaximum {
    pub k: usize,
    pub fidelity: f64,
    /// `t/√n` at the maximum.
    pub tau: f64,
}

/// Grid step for scanning an asymptotic curve: 0.001 or finer, keeping
/// at least 20 samples per period of the fastest beat frequency.
pub fn scan_step(curve: &AsymptoticCurve) -> f64 {
    let spread = curve.amplitude.spread();
    if spread > 0.0 {
        (std::f64::consts::PI / (20.0 * spread)).min(1e-3)
    } else {
        1e-3
    }
}

/// Principal maximum of `F_∞^(k)` on `[0, tau_max]`: dense scan, then
/// golden-section refinement to `|Δτ| < 1e-10`.
pub fn max_asymptotic(k: usize, tau_max: f64) -> Result<AsymptoticMaximum> {
    max_asymptotic_with(k, tau_max, PeakRule::FirstPrincipal, None)
}

/// As [`max_asymptotic`] with an explicit peak rule and optional grid step.
pub fn max_asymptotic_with(
    k: usize,
    tau_max: f64,
    rule: PeakRule,
    step: Option<f64>,
) -> Result<AsymptoticMaximum> {
    if !(tau_max > 0.0 && tau_max.is_finite()) {
        return Err(Error::InvalidArgs(format!(
            "tau window must be positive, got {tau_max}"
        )));
    }
    let curve = AsymptoticCurve::new(k)?;
    let step = step.unwrap_or_else(|| scan_step(&curve));
    let count = (tau_max / step).floor() as usize + 1;
    let values = curve.amplitude.probability_grid(0.0, step, count);
    let times: Vec<f64> = (0..count).map(|i| i as f64 * step).collect();
    let idx = select_peak(&values, rule).expect("non-empty grid");
    if idx + 1 == count {
        return Err(Error::WindowTooSmall {
            tau: times[idx],
            window: tau_max,
        });
    }
    let (tau, fidelity) = refine_peak(|t| curve.fidelity(t), &times, &values, idx, 1e-10);
    Ok(AsymptoticMaximum { k, fidelity, tau })
}

/// `(k, |F_∞^(k)|, τ*)` rows for `k = 1..=kmax`.
pub fn asymptotic_table(kmax: usize, tau_max: f64) -> Result<Vec<AsymptoticMaximum>> {
    (1..=kmax)
        .into_par_iter()
        .map(|k| max_asymptotic(k, tau_max))
        .collect()
}
