//! Walk, marking and search Hamiltonians restricted to the k-excitation sector.
//!
//! Conventions: `σ^z = diag(+1, -1)` on `(|0⟩, |1⟩)`, so the marking term
//! `-½ Σ_{m∈M} σ^z_m` contributes `+½` per excitation sitting on a marked
//! site and `-½` per empty marked site. The XY walk term
//! `¼ Σ_{i≠j} J_ij (σ^x_i σ^x_j + σ^y_i σ^y_j)` moves one excitation from
//! spin `p` to spin `q` with amplitude `J_pq`.

use std::io::{self, Write};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::subspace::{colex_rank, for_each_hop, hamming_distance, BasisState, SubspaceBasis};

/// Symmetric spin-spin coupling strengths, stored row-major with 0-based
/// spin indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingMatrix {
    n: usize,
    values: Vec<f64>,
}

impl CouplingMatrix {
    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let mut values = vec![0.0; n * n];
        for p in 0..n {
            for q in 0..n {
                if p != q {
                    values[p * n + q] = f(p, q);
                }
            }
        }
        Self::from_row_major(n, values)
    }

    /// Validates symmetry, a zero diagonal and finiteness.
    pub fn from_row_major(n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                found: values.len(),
            });
        }
        for p in 0..n {
            if values[p * n + p] != 0.0 {
                return Err(Error::InvalidArgs(format!(
                    "coupling J[{p}][{p}] must be zero"
                )));
            }
            for q in 0..n {
                let v = values[p * n + q];
                if !v.is_finite() {
                    return Err(Error::InvalidArgs(format!("coupling J[{p}][{q}] = {v}")));
                }
                if v != values[q * n + p] {
                    return Err(Error::InvalidArgs(format!(
                        "coupling matrix not symmetric at ({p}, {q})"
                    )));
                }
            }
        }
        Ok(Self { n, values })
    }

    pub fn all_to_all(n: usize) -> Self {
        Self::from_fn(n, |_, _| 1.0).expect("uniform couplings are valid")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Coupling between 0-based spins `p` and `q`.
    pub fn get(&self, p: usize, q: usize) -> f64 {
        self.values[p * self.n + q]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

/// Power-law couplings on a periodic chain,
/// `J_ij = ½(|i-j|^-α + (n-|i-j|)^-α)`.
pub fn long_range_couplings(n: usize, alpha: f64) -> Result<CouplingMatrix> {
    if n < 2 {
        return Err(Error::InvalidArgs(format!(
            "need at least 2 spins, got {n}"
        )));
    }
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidArgs(format!(
            "alpha must be finite and non-negative, got {alpha}"
        )));
    }
    CouplingMatrix::from_fn(n, |p, q| {
        let r = p.abs_diff(q) as f64;
        0.5 * (r.powf(-alpha) + (n as f64 - r).powf(-alpha))
    })
}

/// Real symmetric operator on a subspace basis: dense diagonal plus
/// off-diagonal entries in compressed rows sorted by column.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseHamiltonian {
    diag: Vec<f64>,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

impl SparseHamiltonian {
    pub fn zeros(dim: usize) -> Self {
        Self::diagonal(vec![0.0; dim])
    }

    pub fn diagonal(diag: Vec<f64>) -> Self {
        Self {
            row_ptr: vec![0; diag.len() + 1],
            diag,
            cols: Vec::new(),
            vals: Vec::new(),
        }
    }

    /// Builds from per-row off-diagonal lists; rows are sorted and duplicate
    /// columns summed.
    pub fn from_rows(diag: Vec<f64>, rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        if rows.len() != diag.len() {
            return Err(Error::DimensionMismatch {
                expected: diag.len(),
                found: rows.len(),
            });
        }
        let dim = diag.len();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for (r, mut row) in rows.into_iter().enumerate() {
            row.sort_by_key(|&(c, _)| c);
            let mut last: Option<usize> = None;
            for (c, v) in row {
                if c >= dim || c == r {
                    return Err(Error::InvalidArgs(format!(
                        "off-diagonal entry ({r}, {c}) out of range"
                    )));
                }
                if last == Some(c) {
                    *vals.last_mut().unwrap() += v;
                } else {
                    cols.push(c as u32);
                    vals.push(v);
                    last = Some(c);
                }
            }
            row_ptr.push(cols.len());
        }
        Ok(Self {
            diag,
            row_ptr,
            cols,
            vals,
        })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn offdiag_nnz(&self) -> usize {
        self.vals.len()
    }

    /// Off-diagonal `(column, value)` pairs of row `r`.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[span.clone()]
            .iter()
            .zip(&self.vals[span])
            .map(|(&c, &v)| (c as usize, v))
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        if r == c {
            return self.diag[r];
        }
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.cols[span.clone()].binary_search(&(c as u32)) {
            Ok(i) => self.vals[span.start + i],
            Err(_) => 0.0,
        }
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.dim()).all(|r| self.row(r).all(|(c, v)| self.get(c, r) == v))
    }

    /// `out = H psi`.
    pub fn apply(&self, psi: &[Complex64], out: &mut [Complex64]) {
        for (r, o) in out.iter_mut().enumerate() {
            let mut acc = psi[r] * self.diag[r];
            for (c, v) in self.row(r) {
                acc += psi[c] * v;
            }
            *o = acc;
        }
    }

    /// `⟨psi|H|psi⟩` (real for a symmetric operator).
    pub fn expectation(&self, psi: &[Complex64]) -> f64 {
        let mut hpsi = vec![Complex64::new(0.0, 0.0); psi.len()];
        self.apply(psi, &mut hpsi);
        psi.iter().zip(&hpsi).map(|(a, b)| (a.conj() * b).re).sum()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for r in 0..n {
            m[(r, r)] = self.diag[r];
            for (c, v) in self.row(r) {
                m[(r, c)] = v;
            }
        }
        m
    }

    /// `a·self + b·other`.
    pub fn linear_combination(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        let diag = self
            .diag
            .iter()
            .zip(&other.diag)
            .map(|(x, y)| a * x + b * y)
            .collect();
        let rows = (0..self.dim())
            .map(|r| {
                self.row(r)
                    .map(|(c, v)| (c, a * v))
                    .chain(other.row(r).map(|(c, v)| (c, b * v)))
                    .collect()
            })
            .collect();
        Self::from_rows(diag, rows)
    }

    /// Plain-text coordinate dump: a `dim nnz` header, then one
    /// `row col value` line per stored nonzero (0-based, row-major order,
    /// 17 significant digits).
    pub fn write_coordinate<W: Write>(&self, mut w: W) -> io::Result<()> {
        let mut entries = Vec::new();
        for r in 0..self.dim() {
            let mut row: Vec<(usize, f64)> = self.row(r).collect();
            if self.diag[r] != 0.0 {
                row.push((r, self.diag[r]));
            }
            row.sort_by_key(|&(c, _)| c);
            entries.extend(row.into_iter().map(|(c, v)| (r, c, v)));
        }
        writeln!(w, "{} {}", self.dim(), entries.len())?;
        for (r, c, v) in entries {
            writeln!(w, "{r} {c} {v:.16e}")?;
        }
        Ok(())
    }
}

/// Hopping amplitude between two states one excitation hop apart.
pub fn effective_coupling(a: &BasisState, b: &BasisState, j: &CouplingMatrix) -> Result<f64> {
    let (p, q) = hop_sites(a, b, j)?;
    Ok(j.get(p, q))
}

/// The pair sum `Σ_{i,j} J_ij (a_i - b_i)(b_j - a_j)` taken over ordered
/// pairs. For symmetric couplings this counts each hop twice, i.e. returns
/// `2 J_pq`; [`effective_coupling`] is the amplitude actually produced by the
/// XY Hamiltonian.
pub fn ordered_pair_coupling_sum(
    a: &BasisState,
    b: &BasisState,
    j: &CouplingMatrix,
) -> Result<f64> {
    hop_sites(a, b, j)?;
    let n = j.n();
    let bit = |s: &BasisState, i: usize| if s.occupied(i) { 1.0 } else { 0.0 };
    let mut sum = 0.0;
    for i in 0..n {
        for k in 0..n {
            sum += j.get(i, k) * (bit(a, i) - bit(b, i)) * (bit(b, k) - bit(a, k));
        }
    }
    Ok(sum)
}

fn hop_sites(a: &BasisState, b: &BasisState, j: &CouplingMatrix) -> Result<(usize, usize)> {
    if a.len() != j.n() {
        return Err(Error::DimensionMismatch {
            expected: j.n(),
            found: a.len(),
        });
    }
    let d = hamming_distance(a, b)?;
    if d != 2 || a.weight() != b.weight() {
        return Err(Error::NotAnEdge(d));
    }
    let diff = a.bits() ^ b.bits();
    let p = diff.trailing_zeros() as usize;
    let q = (diff & (diff - 1)).trailing_zeros() as usize;
    Ok((p, q))
}

pub fn build_walk(basis: &SubspaceBasis, j: &CouplingMatrix) -> Result<SparseHamiltonian> {
    if j.n() != basis.n() {
        return Err(Error::DimensionMismatch {
            expected: basis.n(),
            found: j.n(),
        });
    }
    let n = basis.n();
    let rows = basis
        .words()
        .iter()
        .map(|&a| {
            let mut row = Vec::with_capacity(basis.k() * (n - basis.k()));
            for_each_hop(a, n, |b, p, q| {
                let v = j.get(p, q);
                if v != 0.0 {
                    row.push((colex_rank(b), v));
                }
            });
            row
        })
        .collect();
    SparseHamiltonian::from_rows(vec![0.0; basis.len()], rows)
}

/// Diagonal marking term for 1-based marked spin sites.
pub fn build_mark(basis: &SubspaceBasis, marked: &[usize]) -> Result<SparseHamiltonian> {
    if marked.len() != basis.k() {
        return Err(Error::WrongMarkCount {
            expected: basis.k(),
            found: marked.len(),
        });
    }
    let w = BasisState::from_sites(marked, basis.n())?;
    let half_k = basis.k() as f64 / 2.0;
    let diag = basis
        .words()
        .iter()
        .map(|&a| (a & w.bits()).count_ones() as f64 - half_k)
        .collect();
    Ok(SparseHamiltonian::diagonal(diag))
}

/// `γ·walk + mark`.
pub fn build_search(
    walk: &SparseHamiltonian,
    mark: &SparseHamiltonian,
    gamma: f64,
) -> Result<SparseHamiltonian> {
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidArgs(format!(
            "hopping rate must be finite and non-negative, got {gamma}"
        )));
    }
    walk.linear_combination(gamma, mark, 1.0)
}
