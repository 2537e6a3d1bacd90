//! Reference construction in the full `2^n` Hilbert space.
//!
//! Builds `γ·¼Σ_{i≠j} J_ij(σ^x_iσ^x_j + σ^y_iσ^y_j) - ½Σ_{m∈M} σ^z_m` by
//! applying Pauli operators to computational basis states, without any of the
//! sector machinery in [`crate::subspace`] or [`crate::hamiltonian`], and then
//! restricts rows and columns to the weight-k strings found by a linear scan.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hamiltonian::CouplingMatrix;
use crate::spectral::Spectrum;

pub const MAX_BRUTE_FORCE_SPINS: usize = 14;

/// `σ^x` on bit `p`: flip with amplitude 1.
fn sigma_x(b: u64, p: usize) -> (u64, Complex64) {
    (b ^ (1 << p), Complex64::new(1.0, 0.0))
}

/// `σ^y` on bit `p`: `|0⟩ → i|1⟩`, `|1⟩ → -i|0⟩`.
fn sigma_y(b: u64, p: usize) -> (u64, Complex64) {
    let amp = if (b >> p) & 1 == 0 {
        Complex64::new(0.0, 1.0)
    } else {
        Complex64::new(0.0, -1.0)
    };
    (b ^ (1 << p), amp)
}

/// `σ^z` eigenvalue on bit `p`: `+1` on `|0⟩`, `-1` on `|1⟩`.
fn sigma_z(b: u64, p: usize) -> f64 {
    if (b >> p) & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Sparse search Hamiltonian over all `2^n` computational basis states,
/// stored column by column.
#[derive(Debug, Clone)]
pub struct FullSpaceHamiltonian {
    n: usize,
    columns: Vec<Vec<(u64, Complex64)>>,
}

impl FullSpaceHamiltonian {
    /// `marked` holds 1-based spin sites.
    pub fn new(n: usize, marked: &[usize], j: &CouplingMatrix, gamma: f64) -> Result<Self> {
        if n == 0 || n > MAX_BRUTE_FORCE_SPINS {
            return Err(Error::CapacityExceeded {
                requested: 1u128 << n.min(127),
                cap: 1 << MAX_BRUTE_FORCE_SPINS,
            });
        }
        if j.n() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: j.n(),
            });
        }
        if marked.iter().any(|&m| m == 0 || m > n) {
            return Err(Error::InvalidArgs(format!(
                "marked sites {marked:?} outside 1..={n}"
            )));
        }
        let mut columns = Vec::with_capacity(1 << n);
        for b in 0..(1u64 << n) {
            let mut col: Vec<(u64, Complex64)> = Vec::new();
            let diag: f64 = marked.iter().map(|&m| -0.5 * sigma_z(b, m - 1)).sum();
            col.push((b, Complex64::new(diag, 0.0)));
            for p in 0..n {
                for q in 0..n {
                    if p == q {
                        continue;
                    }
                    let coeff = 0.25 * gamma * j.get(p, q);
                    let (bx, ax1) = sigma_x(b, q);
                    let (bx, ax2) = sigma_x(bx, p);
                    let (by, ay1) = sigma_y(b, q);
                    let (by, ay2) = sigma_y(by, p);
                    debug_assert_eq!(bx, by);
                    let amp = (ax1 * ax2 + ay1 * ay2) * coeff;
                    if amp != Complex64::new(0.0, 0.0) {
                        col.push((bx, amp));
                    }
                }
            }
            col.sort_by_key(|&(r, _)| r);
            col.dedup_by(|next, kept| {
                if next.0 == kept.0 {
                    kept.1 += next.1;
                    true
                } else {
                    false
                }
            });
            columns.push(col);
        }
        Ok(Self { n, columns })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `H psi` over the full space.
    pub fn apply(&self, psi: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); psi.len()];
        for (c, col) in self.columns.iter().enumerate() {
            if psi[c] == Complex64::new(0.0, 0.0) {
                continue;
            }
            for &(r, v) in col {
                out[r as usize] += v * psi[c];
            }
        }
        out
    }

    /// Weight-`k` block in ascending integer order, plus the total magnitude
    /// of matrix elements leaving the sector and of imaginary parts inside it.
    pub fn restrict(&self, k: usize) -> (DMatrix<f64>, Vec<u64>, f64) {
        let sector: Vec<u64> = (0..(1u64 << self.n))
            .filter(|b| b.count_ones() as usize == k)
            .collect();
        let mut index = vec![usize::MAX; 1 << self.n];
        for (i, &b) in sector.iter().enumerate() {
            index[b as usize] = i;
        }
        let d = sector.len();
        let mut m = DMatrix::zeros(d, d);
        let mut leakage = 0.0;
        for (c, &b) in sector.iter().enumerate() {
            for &(r, v) in &self.columns[b as usize] {
                let i = index[r as usize];
                if i == usize::MAX {
                    leakage += v.norm();
                } else {
                    m[(i, c)] += v.re;
                    leakage += v.im.abs();
                }
            }
        }
        (m, sector, leakage)
    }
}

/// Restricted reference Hamiltonian with its own sector index.
#[derive(Debug, Clone)]
pub struct BruteForceSector {
    pub matrix: DMatrix<f64>,
    pub states: Vec<u64>,
    pub leakage: f64,
}

impl BruteForceSector {
    pub fn new(
        n: usize,
        k: usize,
        marked: &[usize],
        j: &CouplingMatrix,
        gamma: f64,
    ) -> Result<Self> {
        if k > n {
            return Err(Error::InvalidArgs(format!("k = {k} exceeds n = {n}")));
        }
        let full = FullSpaceHamiltonian::new(n, marked, j, gamma)?;
        let (matrix, states, leakage) = full.restrict(k);
        Ok(Self {
            matrix,
            states,
            leakage,
        })
    }

    pub fn index_of(&self, bits: u64) -> Option<usize> {
        self.states.binary_search(&bits).ok()
    }
}

/// `e^{-iHt} psi0` computed from the full-space construction; `psi0` is
/// indexed by ascending integer value of the weight-`k` strings.
#[allow(clippy::too_many_arguments)]
pub fn brute_force_engine(
    n: usize,
    k: usize,
    marked: &[usize],
    j: &CouplingMatrix,
    gamma: f64,
    psi0: &[Complex64],
    t: f64,
) -> Result<Vec<Complex64>> {
    let sector = BruteForceSector::new(n, k, marked, j, gamma)?;
    if psi0.len() != sector.states.len() {
        return Err(Error::DimensionMismatch {
            expected: sector.states.len(),
            found: psi0.len(),
        });
    }
    Ok(Spectrum::new(sector.matrix).propagate(psi0, t))
}
