//! Scalar maximisation helpers: golden-section refinement and peak selection
//! on sampled curves.

use serde::{Deserialize, Serialize};

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Maximises `f` on `[lo, hi]` by golden-section search until the bracket is
/// narrower than `tol`. Returns `(x, f(x))` for the best point evaluated,
/// endpoints included.
pub fn golden_section_max(mut f: impl FnMut(f64) -> f64, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut best = (a, f(a));
    let fb = f(b);
    if fb > best.1 {
        best = (b, fb);
    }
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    // cap guards against a tolerance below the floating spacing of the bracket
    for _ in 0..200 {
        if (b - a) <= tol {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    for (x, fx) in [(c, fc), (d, fd)] {
        if fx > best.1 {
            best = (x, fx);
        }
    }
    best
}

/// Which maximum of a sampled curve counts as "the" maximum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PeakRule {
    /// First local maximum reaching at least half of the window maximum.
    #[default]
    FirstPrincipal,
    /// Largest sample in the window (earliest on ties).
    Global,
}

/// Index of the selected peak of `values`, or `None` for an empty slice.
pub fn select_peak(values: &[f64], rule: PeakRule) -> Option<usize> {
    let (gi, gmax) = values.iter().copied().enumerate().fold(
        None,
        |acc: Option<(usize, f64)>, (i, v)| match acc {
            Some((_, m)) if v <= m => acc,
            _ => Some((i, v)),
        },
    )?;
    if rule == PeakRule::Global {
        return Some(gi);
    }
    let last = values.len() - 1;
    let threshold = 0.5 * gmax;
    (0..values.len())
        .find(|&i| {
            let v = values[i];
            if v < threshold {
                return false;
            }
            // a plateau only counts where it ends with a strict descent
            let left_ok = i == 0 || values[i - 1] < v || (i < last && values[i - 1] == v);
            let right_ok = i == last || values[i + 1] < v;
            left_ok && right_ok
        })
        .or(Some(gi))
}

/// Refines a grid peak at `times[idx]` by golden-section search over the
/// neighbouring grid cells.
pub fn refine_peak(
    f: impl FnMut(f64) -> f64,
    times: &[f64],
    values: &[f64],
    idx: usize,
    tol: f64,
) -> (f64, f64) {
    let lo = times[idx.saturating_sub(1)];
    let hi = times[(idx + 1).min(times.len() - 1)];
    if hi <= lo {
        return (times[idx], values[idx]);
    }
    let (x, fx) = golden_section_max(f, lo, hi, tol);
    if fx >= values[idx] {
        (x, fx)
    } else {
        (times[idx], values[idx])
    }
}
