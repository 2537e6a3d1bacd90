//! Repeated single-excitation search versus one k-excitation search.
//!
//! Finding k sites one at a time is a coupon-collector problem: each
//! successful single-excitation search reveals one uniformly random marked
//! site. Both protocols repeat each search until the correct outcome has been
//! seen twice.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolve::{max_fidelity, Engine, SearchConfig};
use crate::reduced::{max_asymptotic, DEFAULT_TAU_MAX};
use crate::subspace::binomial;

pub const EULER_MASCHERONI: f64 = 0.577_215_664_901_532_9;

/// Largest repetition count [`min_repeats_r`] will return.
pub const MAX_REPEATS: u64 = 1_000_000;

/// Above this many sites the coverage tail is computed from the occupancy
/// distribution instead of the alternating sum.
pub const INCLUSION_EXCLUSION_MAX_K: usize = 30;

const MAX_TRIALS: u64 = 100_000_000;

/// `E[T] = k·H_k`.
pub fn expected_trials(k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidArgs("need k >= 1".into()));
    }
    Ok(k as f64 * (1..=k).rev().map(|i| 1.0 / i as f64).sum::<f64>())
}

/// `k ln k + γ_EM k + 1/2`.
pub fn expected_trials_asymptotic(k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidArgs("need k >= 1".into()));
    }
    let k = k as f64;
    Ok(k * k.ln() + EULER_MASCHERONI * k + 0.5)
}

fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        len => pairwise_sum(&v[..len / 2]) + pairwise_sum(&v[len / 2..]),
    }
}

fn tail_inclusion_exclusion(k: usize, s: u64) -> f64 {
    let kf = k as f64;
    let mut terms: Vec<f64> = (1..=k)
        .map(|i| {
            let sign = if i % 2 == 1 { 1.0 } else { -1.0 };
            let base = (k - i) as f64 / kf;
            let pow = if s == 0 { 1.0 } else { base.powf(s as f64) };
            sign * binomial(k, i) as f64 * pow
        })
        .collect();
    terms.sort_by(|a, b| b.abs().total_cmp(&a.abs()));
    pairwise_sum(&terms)
}

/// Probability mass that fewer than k distinct sites have been seen, from
/// the distribution of the distinct count after each draw.
fn tail_occupancy(k: usize, s: u64) -> f64 {
    let kf = k as f64;
    let mut p = vec![0.0; k + 1];
    p[0] = 1.0;
    for step in 0..s {
        let top = (step as usize + 1).min(k);
        for j in (1..=top).rev() {
            p[j] = p[j] * j as f64 / kf + p[j - 1] * (k - j + 1) as f64 / kf;
        }
        p[0] = 0.0;
    }
    p[..k].iter().sum()
}

/// `P(T > s)`: probability that `s` uniform draws over `k` sites miss at
/// least one site.
pub fn coverage_tail(k: usize, s: u64) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidArgs("need k >= 1".into()));
    }
    if (s as u128) < k as u128 {
        return Ok(1.0);
    }
    let p = if k <= INCLUSION_EXCLUSION_MAX_K {
        tail_inclusion_exclusion(k, s)
    } else {
        tail_occupancy(k, s)
    };
    Ok(p.clamp(0.0, 1.0))
}

fn check_budget(eps: f64, name: &str) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidArgs(format!(
            "{name} must lie in (0, 1), got {eps}"
        )));
    }
    Ok(())
}

/// Least `s` with `P(T > s) < ε_s`.
pub fn min_trials_s(k: usize, epsilon_s: f64) -> Result<u64> {
    check_budget(epsilon_s, "epsilon_s")?;
    let mut s = k as u64;
    while coverage_tail(k, s)? >= epsilon_s {
        s += 1;
        if s > MAX_TRIALS {
            return Err(Error::InvalidArgs(format!(
                "no trial count below {MAX_TRIALS} meets epsilon_s = {epsilon_s}"
            )));
        }
    }
    Ok(s)
}

/// `(1-F)^r + r F (1-F)^{r-1}`, the probability of fewer than two
/// successes in `r` searches.
pub fn repeat_failure(f: f64, r: u64) -> f64 {
    if r == 0 {
        return 1.0;
    }
    let q = 1.0 - f;
    let r_f = r as f64;
    q.powf(r_f) + r_f * f * q.powf(r_f - 1.0)
}

/// Least `r` with [`repeat_failure`] below `ε_r`.
pub fn min_repeats_r(f: f64, epsilon_r: f64) -> Result<u64> {
    check_budget(epsilon_r, "epsilon_r")?;
    if !(f > 0.0 && f <= 1.0) {
        return Err(Error::InvalidArgs(format!(
            "fidelity must lie in (0, 1], got {f}"
        )));
    }
    let mut r = 1;
    while repeat_failure(f, r) >= epsilon_r {
        r += 1;
        if r > MAX_REPEATS {
            return Err(Error::Diverges {
                fidelity: f,
                cap: MAX_REPEATS,
            });
        }
    }
    Ok(r)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolComparison {
    pub k: usize,
    /// `None` for the large-n limit, where times are in units of `√n`.
    pub n: Option<usize>,
    pub epsilon_s: f64,
    pub epsilon_r: f64,
    pub s_k: u64,
    pub r_single: u64,
    pub r_k: u64,
    pub f_single: f64,
    pub f_ksub: f64,
    pub t_1subspace: f64,
    pub t_ksubspace: f64,
    pub ratio: f64,
}

impl ProtocolComparison {
    /// `C(n,k)` when `n` is known.
    pub fn states(&self) -> Option<u64> {
        self.n.map(|n| binomial(n, self.k))
    }
}

fn check_inputs(f: f64, t: f64, what: &str) -> Result<()> {
    if !(f > 0.0 && f <= 1.0) {
        return Err(Error::InvalidArgs(format!(
            "{what} fidelity must lie in (0, 1], got {f}"
        )));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgs(format!(
            "{what} time must be positive, got {t}"
        )));
    }
    Ok(())
}

/// `t_1 = s_k r^(1) t_single` and `t_k = r^(k) t_ksub`.
#[allow(clippy::too_many_arguments)]
pub fn protocol_times(
    n: Option<usize>,
    k: usize,
    epsilon_s: f64,
    epsilon_r: f64,
    f_single: f64,
    t_single: f64,
    f_ksub: f64,
    t_ksub: f64,
) -> Result<ProtocolComparison> {
    check_inputs(f_single, t_single, "single-excitation")?;
    check_inputs(f_ksub, t_ksub, "k-excitation")?;
    let s_k = min_trials_s(k, epsilon_s)?;
    let r_single = min_repeats_r(f_single, epsilon_r)?;
    let r_k = min_repeats_r(f_ksub, epsilon_r)?;
    let t_1subspace = s_k as f64 * r_single as f64 * t_single;
    let t_ksubspace = r_k as f64 * t_ksub;
    Ok(ProtocolComparison {
        k,
        n,
        epsilon_s,
        epsilon_r,
        s_k,
        r_single,
        r_k,
        f_single,
        f_ksub,
        t_1subspace,
        t_ksubspace,
        ratio: t_1subspace / t_ksubspace,
    })
}

/// Comparison in the large-n limit, fidelities and times from the
/// asymptotic maxima; times are reported in units of `√n`.
pub fn asymptotic_comparison(
    k: usize,
    epsilon_s: f64,
    epsilon_r: f64,
) -> Result<ProtocolComparison> {
    let single = max_asymptotic(1, DEFAULT_TAU_MAX)?;
    let multi = max_asymptotic(k, DEFAULT_TAU_MAX)?;
    protocol_times(
        None,
        k,
        epsilon_s,
        epsilon_r,
        single.fidelity,
        PI / 2.0,
        multi.fidelity,
        multi.tau,
    )
}

/// Comparison at finite `n` with `γ = 1/n`, both searches run on the reduced
/// engine. The single-excitation search time is `π√n/2`.
pub fn finite_comparison(
    n: usize,
    k: usize,
    epsilon_s: f64,
    epsilon_r: f64,
) -> Result<ProtocolComparison> {
    let gamma = 1.0 / n as f64;
    let single = max_fidelity(&SearchConfig::new(n, 1, gamma).with_engine(Engine::Reduced))?;
    let multi = max_fidelity(&SearchConfig::new(n, k, gamma).with_engine(Engine::Reduced))?;
    protocol_times(
        Some(n),
        k,
        epsilon_s,
        epsilon_r,
        single.value,
        PI * (n as f64).sqrt() / 2.0,
        multi.value,
        multi.time,
    )
}

/// Every `(k, n)` pair with `k <= n/2`, sorted by `(k, n)`.
pub fn protocol_sweep(
    ks: &[usize],
    ns: &[usize],
    epsilon_s: f64,
    epsilon_r: f64,
) -> Result<Vec<ProtocolComparison>> {
    let mut pairs: Vec<(usize, usize)> = ks
        .iter()
        .flat_map(|&k| ns.iter().map(move |&n| (k, n)))
        .filter(|&(k, n)| k >= 1 && 2 * k <= n)
        .collect();
    pairs.sort_unstable();
    pairs.dedup();
    pairs
        .par_iter()
        .map(|&(k, n)| finite_comparison(n, k, epsilon_s, epsilon_r))
        .collect()
}
