//! Exact propagation through a dense symmetric eigendecomposition.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

/// Eigendecomposition `H = V diag(λ) Vᵀ` of a real symmetric matrix.
#[derive(Debug, Clone)]
pub struct Spectrum {
    values: Vec<f64>,
    vectors: DMatrix<f64>,
}

impl Spectrum {
    pub fn new(h: DMatrix<f64>) -> Self {
        let eig = SymmetricEigen::new(h);
        Self {
            values: eig.eigenvalues.iter().copied().collect(),
            vectors: eig.eigenvectors,
        }
    }

    /// Eigendecomposition of a symmetric tridiagonal matrix.
    pub fn tridiagonal(diag: &[f64], offdiag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = diag[i];
        }
        for (i, &b) in offdiag.iter().enumerate() {
            m[(i, i + 1)] = b;
            m[(i + 1, i)] = b;
        }
        Self::new(m)
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.values
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    pub fn spread(&self) -> f64 {
        let lo = self.values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self
            .values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        hi - lo
    }

    /// Components of `psi` in the eigenbasis, `Vᵀ psi`.
    pub fn to_eigenbasis(&self, psi: &[Complex64]) -> Vec<Complex64> {
        let n = self.dim();
        (0..n)
            .map(|m| {
                let col = self.vectors.column(m);
                psi.iter()
                    .zip(col.iter())
                    .fold(Complex64::new(0.0, 0.0), |acc, (p, v)| acc + p * v)
            })
            .collect()
    }

    /// `e^{-iHt} psi`.
    pub fn propagate(&self, psi: &[Complex64], t: f64) -> Vec<Complex64> {
        let coeffs = self.to_eigenbasis(psi);
        self.synthesize(&coeffs, t)
    }

    /// Back-transforms eigenbasis coefficients evolved to time `t`.
    pub fn synthesize(&self, coeffs: &[Complex64], t: f64) -> Vec<Complex64> {
        let n = self.dim();
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for (m, (&c, &lam)) in coeffs.iter().zip(&self.values).enumerate() {
            let ph = c * Complex64::from_polar(1.0, -lam * t);
            for (o, v) in out.iter_mut().zip(self.vectors.column(m).iter()) {
                *o += ph * v;
            }
        }
        out
    }

    /// The scalar `t ↦ ⟨e_target| e^{-iHt} |psi⟩` as a sum of phases.
    pub fn amplitude(&self, target: usize, psi: &[Complex64]) -> PhaseSum {
        let coeffs = self.to_eigenbasis(psi);
        let weights = coeffs
            .iter()
            .enumerate()
            .map(|(m, c)| c * self.vectors[(target, m)])
            .collect();
        PhaseSum::new(self.values.clone(), weights)
    }
}

/// `a(t) = Σ_m w_m e^{-i λ_m t}`, with frequencies stored relative to their
/// mean (a global phase that leaves `|a(t)|` unchanged).
#[derive(Debug, Clone)]
pub struct PhaseSum {
    freqs: Vec<f64>,
    weights: Vec<Complex64>,
}

impl PhaseSum {
    pub fn new(freqs: Vec<f64>, weights: Vec<Complex64>) -> Self {
        let mean = if freqs.is_empty() {
            0.0
        } else {
            freqs.iter().sum::<f64>() / freqs.len() as f64
        };
        let mut keep_f = Vec::with_capacity(freqs.len());
        let mut keep_w = Vec::with_capacity(freqs.len());
        for (f, w) in freqs.into_iter().zip(weights) {
            if w != Complex64::new(0.0, 0.0) {
                keep_f.push(f - mean);
                keep_w.push(w);
            }
        }
        Self {
            freqs: keep_f,
            weights: keep_w,
        }
    }

    pub fn spread(&self) -> f64 {
        let lo = self.freqs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.freqs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if lo.is_finite() {
            hi - lo
        } else {
            0.0
        }
    }

    pub fn at(&self, t: f64) -> Complex64 {
        self.freqs
            .iter()
            .zip(&self.weights)
            .fold(Complex64::new(0.0, 0.0), |acc, (&f, &w)| {
                acc + w * Complex64::from_polar(1.0, -f * t)
            })
    }

    pub fn probability(&self, t: f64) -> f64 {
        self.at(t).norm_sqr()
    }

    /// `|a(t0 + i·dt)|²` for `i in 0..count`, advancing each phase by a
    /// fixed rotation and resynchronising exactly every 512 steps.
    pub fn probability_grid(&self, t0: f64, dt: f64, count: usize) -> Vec<f64> {
        const RESYNC: usize = 512;
        let step: Vec<Complex64> = self
            .freqs
            .iter()
            .map(|&f| Complex64::from_polar(1.0, -f * dt))
            .collect();
        let mut terms: Vec<Complex64> = Vec::new();
        let mut out = Vec::with_capacity(count);
        for i in 0..count {
            if i % RESYNC == 0 {
                let t = t0 + i as f64 * dt;
                terms = self
                    .freqs
                    .iter()
                    .zip(&self.weights)
                    .map(|(&f, &w)| w * Complex64::from_polar(1.0, -f * t))
                    .collect();
            } else {
                for (term, s) in terms.iter_mut().zip(&step) {
                    *term *= s;
                }
            }
            let a: Complex64 = terms.iter().sum();
            out.push(a.norm_sqr());
        }
        out
    }
}
