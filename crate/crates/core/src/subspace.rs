//! Combinatorics of the k-excitation subspace.
//!
//! A basis state of `n` spins is packed into a `u64` with bit `p` holding the
//! occupation of spin `p + 1`. The canonical order of a [`SubspaceBasis`] is
//! colexicographic on the occupied-spin sets, which for this packing is the
//! same as ascending integer value. Ranks are computed with the combinatorial
//! number system, so no lookup table over the basis is ever stored.
//!
//! Textual bit strings are written most-significant bit first, so the last
//! character is spin 1: `"0011"` has excitations on spins 1 and 2.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported spin count (one machine word per state).
pub const MAX_SPINS: usize = 64;

/// Default cap on the number of basis states a [`SubspaceBasis`] may hold.
pub const DEFAULT_MAX_STATES: usize = 5_000_000;

const fn binomial_table() -> [[u64; MAX_SPINS + 1]; MAX_SPINS + 1] {
    let mut t = [[0u64; MAX_SPINS + 1]; MAX_SPINS + 1];
    let mut n = 0;
    while n <= MAX_SPINS {
        t[n][0] = 1;
        let mut k = 1;
        while k <= n {
            t[n][k] = t[n - 1][k - 1] + if k < n { t[n - 1][k] } else { 0 };
            k += 1;
        }
        n += 1;
    }
    t
}

static BINOMIAL: [[u64; MAX_SPINS + 1]; MAX_SPINS + 1] = binomial_table();

/// `C(n, k)`, zero when `k > n`, saturating at `u64::MAX`.
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    if n <= MAX_SPINS {
        return BINOMIAL[n][k];
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // exact: acc * (n - i) is divisible by i + 1 at every step
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// Number of states at graph distance `q` from a fixed vertex of `J(n, k)`:
/// `C(k, q) * C(n - k, q)`.
/// Saturates at `u64::MAX`; see [`class_size_f64`] for large `n`.
pub fn class_size(n: usize, k: usize, q: usize) -> u64 {
    binomial(k, q).saturating_mul(binomial(n - k, q))
}

fn binomial_f64(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let exact = binomial(n, k);
    if exact != u64::MAX {
        return exact as f64;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// [`class_size`] in floating point, without overflow.
pub fn class_size_f64(n: usize, k: usize, q: usize) -> f64 {
    match binomial(k, q).checked_mul(binomial(n - k, q)) {
        Some(v) if v != u64::MAX => v as f64,
        _ => binomial_f64(k, q) * binomial_f64(n - k, q),
    }
}

/// One spin configuration of `len` spins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BasisState {
    bits: u64,
    len: usize,
}

impl BasisState {
    pub fn new(bits: u64, len: usize) -> Result<Self> {
        if len == 0 || len > MAX_SPINS {
            return Err(Error::InvalidArgs(format!(
                "spin count must be in 1..={MAX_SPINS}, got {len}"
            )));
        }
        if len < 64 && bits >> len != 0 {
            return Err(Error::InvalidArgs(format!(
                "bits {bits:#x} do not fit in {len} spins"
            )));
        }
        Ok(Self { bits, len })
    }

    /// State with excitations on the given 1-based spin sites.
    pub fn from_sites(sites: &[usize], len: usize) -> Result<Self> {
        let mut bits = 0u64;
        for &s in sites {
            if s == 0 || s > len {
                return Err(Error::InvalidArgs(format!(
                    "spin site {s} outside 1..={len}"
                )));
            }
            let bit = 1u64 << (s - 1);
            if bits & bit != 0 {
                return Err(Error::InvalidArgs(format!("spin site {s} repeated")));
            }
            bits |= bit;
        }
        Self::new(bits, len)
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn weight(&self) -> usize {
        self.bits.count_ones() as usize
    }

    /// Occupation of the 0-based spin `p`.
    pub fn occupied(&self, p: usize) -> bool {
        (self.bits >> p) & 1 == 1
    }

    /// 1-based sites carrying an excitation, ascending.
    pub fn sites(&self) -> Vec<usize> {
        (0..self.len)
            .filter(|&p| self.occupied(p))
            .map(|p| p + 1)
            .collect()
    }
}

impl fmt::Display for BasisState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in (0..self.len).rev() {
            f.write_str(if self.occupied(p) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for BasisState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let len = s.len();
        let mut bits = 0u64;
        for (i, c) in s.chars().enumerate() {
            let p = len - 1 - i;
            match c {
                '0' => {}
                '1' => bits |= 1u64 << p,
                _ => return Err(Error::InvalidArgs(format!("not a bit string: {s:?}"))),
            }
        }
        Self::new(bits, len)
    }
}

pub fn hamming_distance(a: &BasisState, b: &BasisState) -> Result<u32> {
    if a.len != b.len {
        return Err(Error::LengthMismatch(a.len, b.len));
    }
    Ok((a.bits ^ b.bits).count_ones())
}

/// Colex rank of a packed weight-`k` word among all weight-`k` words.
pub(crate) fn colex_rank(mut bits: u64) -> usize {
    let mut rank = 0u64;
    let mut i = 1;
    while bits != 0 {
        let p = bits.trailing_zeros() as usize;
        rank += binomial(p, i);
        bits &= bits - 1;
        i += 1;
    }
    rank as usize
}

/// Inverse of [`colex_rank`] for words of weight `k` over `n` bits.
pub(crate) fn colex_unrank(n: usize, k: usize, rank: usize) -> u64 {
    let mut r = rank as u64;
    let mut bits = 0u64;
    let mut hi = n;
    for i in (1..=k).rev() {
        // largest c < hi with C(c, i) <= r
        let mut c = hi - 1;
        while binomial(c, i) > r {
            c -= 1;
        }
        r -= binomial(c, i);
        bits |= 1u64 << c;
        hi = c;
    }
    bits
}

/// All weight-`k` states of `n` spins in canonical order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubspaceBasis {
    n: usize,
    k: usize,
    states: Vec<u64>,
}

pub fn enumerate_basis(n: usize, k: usize) -> Result<SubspaceBasis> {
    SubspaceBasis::with_cap(n, k, DEFAULT_MAX_STATES)
}

impl SubspaceBasis {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        Self::with_cap(n, k, DEFAULT_MAX_STATES)
    }

    pub fn with_cap(n: usize, k: usize, max_states: usize) -> Result<Self> {
        if n == 0 || n > MAX_SPINS {
            return Err(Error::InvalidArgs(format!(
                "spin count must be in 1..={MAX_SPINS}, got {n}"
            )));
        }
        if k > n {
            return Err(Error::InvalidArgs(format!("k = {k} exceeds n = {n}")));
        }
        let size = binomial(n, k);
        if size as u128 > max_states as u128 {
            return Err(Error::CapacityExceeded {
                requested: size as u128,
                cap: max_states,
            });
        }
        let mut states = Vec::with_capacity(size as usize);
        if k == 0 {
            states.push(0);
        } else {
            // Gosper's hack walks same-weight words in ascending order.
            let mut v: u64 = if k == 64 { u64::MAX } else { (1u64 << k) - 1 };
            for i in 0..size {
                states.push(v);
                if i + 1 == size {
                    break;
                }
                let t = v | (v - 1);
                v = t.wrapping_add(1)
                    | (((!t & t.wrapping_add(1)) - 1) >> (v.trailing_zeros() + 1));
            }
        }
        Ok(Self { n, k, states })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn words(&self) -> &[u64] {
        &self.states
    }

    pub fn state(&self, rank: usize) -> Option<BasisState> {
        self.states
            .get(rank)
            .map(|&bits| BasisState { bits, len: self.n })
    }

    pub fn iter(&self) -> impl Iterator<Item = BasisState> + '_ {
        self.states
            .iter()
            .map(move |&bits| BasisState { bits, len: self.n })
    }

    pub fn contains(&self, s: &BasisState) -> bool {
        s.len == self.n && s.weight() == self.k
    }

    pub fn rank(&self, s: &BasisState) -> Result<usize> {
        if !self.contains(s) {
            return Err(Error::NotInBasis(s.to_string()));
        }
        Ok(colex_rank(s.bits))
    }

    pub fn unrank(&self, rank: usize) -> Result<BasisState> {
        if rank >= self.len() {
            return Err(Error::InvalidArgs(format!(
                "rank {rank} out of range for basis of size {}",
                self.len()
            )));
        }
        Ok(BasisState {
            bits: colex_unrank(self.n, self.k, rank),
            len: self.n,
        })
    }

    /// Ranks of all states one excitation hop away from `a`, ascending.
    pub fn neighbors(&self, a: &BasisState) -> Result<Vec<usize>> {
        if !self.contains(a) {
            return Err(Error::NotInBasis(a.to_string()));
        }
        let mut out = Vec::with_capacity(self.k * (self.n - self.k));
        for_each_hop(a.bits, self.n, |b, _, _| out.push(colex_rank(b)));
        out.sort_unstable();
        Ok(out)
    }

    pub fn distance_classes(&self, w: &BasisState) -> Result<DistanceClassTable> {
        distance_classes(self, w)
    }
}

/// Calls `f(b, from, to)` for every word `b` reached from `a` by moving one
/// excitation from spin `from` to empty spin `to` (0-based).
pub(crate) fn for_each_hop(a: u64, n: usize, mut f: impl FnMut(u64, usize, usize)) {
    let full = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let mut occ = a;
    while occ != 0 {
        let p = occ.trailing_zeros() as usize;
        occ &= occ - 1;
        let mut empty = !a & full;
        while empty != 0 {
            let q = empty.trailing_zeros() as usize;
            empty &= empty - 1;
            f(a ^ (1u64 << p) ^ (1u64 << q), p, q);
        }
    }
}

/// Partition of a basis by graph distance from a reference state `w`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceClassTable {
    pub w: BasisState,
    /// `classes[q]`: ranks at Hamming distance `2q` from `w`, ascending.
    pub classes: Vec<Vec<usize>>,
    pub sizes: Vec<u64>,
}

pub fn distance_classes(basis: &SubspaceBasis, w: &BasisState) -> Result<DistanceClassTable> {
    if !basis.contains(w) {
        return Err(Error::NotInBasis(w.to_string()));
    }
    let mut classes = vec![Vec::new(); basis.k + 1];
    for (rank, &bits) in basis.states.iter().enumerate() {
        let d = (bits ^ w.bits).count_ones() as usize;
        classes[d / 2].push(rank);
    }
    let sizes = classes.iter().map(|c| c.len() as u64).collect();
    Ok(DistanceClassTable {
        w: *w,
        classes,
        sizes,
    })
}

/// Size of `D_1(a) ∩ D_{j-1}(w)` for any `a` in `D_{i-1}(w)` on `J(n, k)`,
/// with 1-based class indices `i, j` in `1..=k+1`.
///
/// The forward count (`j = i + 1`) is `(k-i+1)(n-k-i+1)`; the backward count
/// (`i = j + 1`) is `(i-1)^2`, the number of ways to undo one of the `i-1`
/// swaps that separate `a` from `w`.
pub fn intersection_count(n: usize, k: usize, i: usize, j: usize) -> Result<u64> {
    if k > n || i == 0 || j == 0 || i > k + 1 || j > k + 1 {
        return Err(Error::InvalidArgs(format!(
            "intersection_count(n={n}, k={k}, i={i}, j={j}) requires k <= n and 1 <= i, j <= k + 1"
        )));
    }
    let (n, k, i, j) = (n as i64, k as i64, i as i64, j as i64);
    let count = if i == j {
        (i - 1) * (n - 2 * i + 2)
    } else if j == i + 1 {
        (k - i + 1) * (n - k - i + 1)
    } else if i == j + 1 {
        (i - 1) * (i - 1)
    } else {
        0
    };
    Ok(count.max(0) as u64)
}
