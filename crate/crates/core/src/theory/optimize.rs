//! Small 1-D root finding and minimisation helpers.

use crate::error::{Error, Result};

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Bisection on `[lo, hi]` for a sign change of `f`. Stops when the bracket
/// is below `rel_tol * max(|lo|, |hi|)` (or `abs_tol`).
pub(crate) fn bisect<F: FnMut(f64) -> f64>(
    what: &'static str,
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<f64> {
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() || f_lo.is_nan() || f_hi.is_nan() {
        return Err(Error::Bracket {
            what,
            lo,
            hi,
            f_lo,
            f_hi,
        });
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo) <= rel_tol * lo.abs().max(hi.abs()) || (hi - lo) <= abs_tol || mid == lo || mid == hi {
            break;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Golden-section search for a minimum of a unimodal `f` on `[lo, hi]`.
pub(crate) fn golden_min<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, rel_tol: f64) -> (f64, f64) {
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..300 {
        if (hi - lo) <= rel_tol * x1.abs().max(x2.abs()).max(f64::MIN_POSITIVE) {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Minimum of `f` found on a grid and refined by golden section.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct GridMin {
    pub x: f64,
    pub value: f64,
    /// The grid could not distinguish a minimum (flat function).
    pub flat: bool,
}

/// Scans `grid` (sorted), then refines the best cell with golden section.
pub(crate) fn grid_then_golden<F: FnMut(f64) -> f64>(mut f: F, grid: &[f64], rel_tol: f64) -> GridMin {
    let values: Vec<f64> = grid.iter().map(|&x| f(x)).collect();
    let (best, &best_val) = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty grid");
    let spread = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - best_val;
    let flat = !(spread > 1e-14 * best_val.abs().max(1.0));
    if flat {
        return GridMin {
            x: grid[best],
            value: best_val,
            flat,
        };
    }
    let lo = grid[best.saturating_sub(1)];
    let hi = grid[(best + 1).min(grid.len() - 1)];
    let (x, value) = golden_min(&mut f, lo, hi, rel_tol);
    if value <= best_val {
        GridMin { x, value, flat }
    } else {
        GridMin {
            x: grid[best],
            value: best_val,
            flat,
        }
    }
}

/// `count` evenly spaced points on `[lo, hi]`.
pub(crate) fn linear_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let step = (hi - lo) / (count - 1) as f64;
    (0..count).map(|i| lo + step * i as f64).collect()
}

/// Linear grid merged with a geometric one, for functions whose interesting
/// region may sit anywhere between `hi * 1e-9` and `hi`.
pub(crate) fn mixed_grid(hi: f64, count: usize) -> Vec<f64> {
    let mut grid = linear_grid(0.0, hi, count);
    let lo = hi * 1e-9;
    let ratio = (hi / lo).powf(1.0 / (count - 1) as f64);
    grid.extend((0..count).map(|i| lo * ratio.powi(i as i32)).filter(|&x| x < hi));
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}
