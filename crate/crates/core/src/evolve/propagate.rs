use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::SparseHamiltonian;
use crate::spectral::Spectrum;

/// Sector dimension above which [`propagate`] switches from dense
/// diagonalisation to Krylov stepping.
pub const DENSE_LIMIT: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KrylovOptions {
    pub subspace_dim: usize,
    /// Local error bound per accepted step, relative to the state norm.
    pub tol: f64,
    pub max_halvings: u32,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        Self {
            subspace_dim: 30,
            tol: 1e-12,
            max_halvings: 60,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Method {
    Dense,
    Krylov(KrylovOptions),
}

impl Method {
    pub fn for_dim(dim: usize, dense_limit: usize) -> Self {
        if dim <= dense_limit {
            Method::Dense
        } else {
            Method::Krylov(KrylovOptions::default())
        }
    }
}

fn check_dims(h: &SparseHamiltonian, psi: &[Complex64]) -> Result<()> {
    if h.dim() != psi.len() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            found: psi.len(),
        });
    }
    Ok(())
}

/// `e^{-iHt} psi0`, dense below [`DENSE_LIMIT`] and Krylov above it.
pub fn propagate(h: &SparseHamiltonian, psi0: &[Complex64], t: f64) -> Result<Vec<Complex64>> {
    propagate_with(h, psi0, t, Method::for_dim(h.dim(), DENSE_LIMIT))
}

pub fn propagate_with(
    h: &SparseHamiltonian,
    psi0: &[Complex64],
    t: f64,
    method: Method,
) -> Result<Vec<Complex64>> {
    check_dims(h, psi0)?;
    if !t.is_finite() {
        return Err(Error::InvalidArgs(format!("time must be finite, got {t}")));
    }
    if t == 0.0 {
        return Ok(psi0.to_vec());
    }
    match method {
        Method::Dense => Ok(Spectrum::new(h.to_dense()).propagate(psi0, t)),
        Method::Krylov(opts) => krylov_propagate(h, psi0, t, &opts),
    }
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter()
        .zip(b)
        .fold(Complex64::new(0.0, 0.0), |acc, (x, y)| acc + x.conj() * y)
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Lanczos recurrence grown one vector at a time with full
/// reorthogonalisation. `alpha`/`beta` hold the tridiagonal projection onto
/// `basis`; `residual` is the coupling out of it (zero on happy breakdown).
struct Lanczos {
    basis: Vec<Vec<Complex64>>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    next: Vec<Complex64>,
    residual: f64,
    hnorm_est: f64,
}

impl Lanczos {
    fn new(start: &[Complex64], s: f64) -> Self {
        Self {
            basis: vec![start.iter().map(|x| x / s).collect()],
            alpha: Vec::new(),
            beta: Vec::new(),
            next: vec![Complex64::new(0.0, 0.0); start.len()],
            residual: f64::INFINITY,
            hnorm_est: 0.0,
        }
    }

    fn len(&self) -> usize {
        self.alpha.len()
    }

    fn exhausted(&self) -> bool {
        self.residual == 0.0 || self.len() == self.next.len()
    }

    /// Adds one vector to the projection.
    fn extend(&mut self, h: &SparseHamiltonian) {
        if !self.alpha.is_empty() {
            let b = self.residual;
            self.beta.push(b);
            self.basis.push(self.next.iter().map(|x| x / b).collect());
        }
        let j = self.basis.len() - 1;
        let w = &mut self.next;
        h.apply(&self.basis[j], w);
        let a = dot(&self.basis[j], w).re;
        self.alpha.push(a);
        for (wi, vi) in w.iter_mut().zip(&self.basis[j]) {
            *wi -= vi * a;
        }
        if j > 0 {
            let b = self.beta[j - 1];
            for (wi, vi) in w.iter_mut().zip(&self.basis[j - 1]) {
                *wi -= vi * b;
            }
        }
        // full reorthogonalisation, twice is enough
        for _ in 0..2 {
            for v in &self.basis {
                let c = dot(v, w);
                for (wi, vi) in w.iter_mut().zip(v) {
                    *wi -= vi * c;
                }
            }
        }
        let b = norm(w);
        self.hnorm_est = self
            .hnorm_est
            .max(a.abs() + b + self.beta.last().copied().unwrap_or(0.0));
        self.residual = if b <= 1e-14 * self.hnorm_est.max(1.0) {
            0.0
        } else {
            b
        };
    }

    /// `exp(-i T dt) e_1` in the current basis and its local error bound,
    /// both relative to the norm of the start vector.
    fn step(&self, dt: f64) -> (Vec<Complex64>, f64) {
        let m = self.len();
        let spec = Spectrum::tridiagonal(&self.alpha, &self.beta);
        let q = spec.eigenvectors();
        let theta = spec.eigenvalues();
        let y: Vec<Complex64> = (0..m)
            .map(|r| {
                (0..m).fold(Complex64::new(0.0, 0.0), |acc, c| {
                    acc + Complex64::from_polar(q[(r, c)] * q[(0, c)], -theta[c] * dt)
                })
            })
            .collect();
        let err = if m == self.next.len() {
            0.0
        } else {
            self.residual * y[m - 1].norm()
        };
        (y, err)
    }
}

fn krylov_propagate(
    h: &SparseHamiltonian,
    psi0: &[Complex64],
    t: f64,
    opts: &KrylovOptions,
) -> Result<Vec<Complex64>> {
    let mut state = psi0.to_vec();
    let scale = norm(psi0);
    if scale == 0.0 {
        return Ok(state);
    }
    let m_max = opts.subspace_dim.max(1);
    let mut remaining = t;
    let mut trial = t;
    while remaining != 0.0 {
        let beta0 = norm(&state);
        let tol = opts.tol * scale / beta0;
        let mut dt = if trial.abs() > remaining.abs() {
            remaining
        } else {
            trial
        };
        let mut lz = Lanczos::new(&state, beta0);
        // grow the basis until the step is resolved or the basis is full
        let (mut coeffs, mut err) = loop {
            lz.extend(h);
            let (y, err) = lz.step(dt);
            if err <= tol || lz.exhausted() || lz.len() >= m_max {
                break (y, err);
            }
        };
        let mut halvings = 0;
        while err > tol {
            halvings += 1;
            if halvings > opts.max_halvings {
                return Err(Error::ConvergenceFailure(format!(
                    "local error {:e} above {:e} after {halvings} step halvings",
                    err * beta0,
                    opts.tol * scale
                )));
            }
            dt *= 0.5;
            (coeffs, err) = lz.step(dt);
        }
        let mut next = vec![Complex64::new(0.0, 0.0); state.len()];
        for (c, v) in coeffs.iter().zip(&lz.basis) {
            let c = c * beta0;
            for (o, x) in next.iter_mut().zip(v) {
                *o += c * x;
            }
        }
        state = next;
        // guard against the last step leaving a rounding-sized residue
        remaining = if (remaining - dt).abs() <= 1e-15 * t.abs() {
            0.0
        } else {
            remaining - dt
        };
        trial = if halvings == 0 && lz.len() < m_max {
            dt * 2.0
        } else {
            dt
        };
    }
    Ok(state)
}
