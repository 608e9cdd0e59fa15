//! The sparse (`p ~ c/n`) and dense (`p ~ c n^(-1/r)`) boundary regimes.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::optimize::{bisect, golden_min};
use super::special::{ln_factorial, poisson_cdf_below, poisson_pmf};
use crate::error::{domain, Error, Result};
use crate::seed::Seed;

const ROOT_GRID: usize = 10_000;
const ROOT_TOL: f64 = 1e-12;
const MERGE_TOL: f64 = 1e-8;

/// `c_r = r + P(Po(r-1) <= r-2) / P(Po(r-1) = r-1)`, the smallest `c` with
/// more than one fixed point.
pub fn c_r(r: u32) -> f64 {
    let y = (r - 1) as f64;
    let below = poisson_cdf_below(y, r - 1);
    let at = poisson_pmf((r - 1) as u64, y);
    r as f64 + below / at
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// `c_r` as a reduced fraction `(numerator, denominator)`:
/// `r + sum_{j<=r-2} (r-1)!/j! (r-1)^j / (r-1)^(r-1)`.
/// `None` if the integers overflow (r above ~25).
pub fn c_r_exact(r: u32) -> Option<(u128, u128)> {
    let m = (r - 1) as u128;
    let den = m.checked_pow(r - 1)?;
    let mut num: u128 = 0;
    for j in 0..r.saturating_sub(1) {
        // (r-1)!/j! = (j+1)(j+2)...(r-1)
        let falling = ((j as u128 + 1)..=m).try_fold(1u128, |acc, k| acc.checked_mul(k))?;
        num = num.checked_add(falling.checked_mul(m.checked_pow(j)?)?)?;
    }
    num = num.checked_add((r as u128).checked_mul(den)?)?;
    let g = gcd(num, den);
    Some((num / g, den / g))
}

/// `theta_c(c_r) = 1 - 1 / (r P(Po(r-1) = r-1) + P(Po(r-1) <= r-2))`.
pub fn theta_cc(r: u32) -> f64 {
    let y = (r - 1) as f64;
    1.0 - 1.0 / (r as f64 * poisson_pmf((r - 1) as u64, y) + poisson_cdf_below(y, r - 1))
}

/// `f(x, c, theta) = 1 - x - (1 - theta) P(Po(cx) <= r-1)`, equal to
/// `(1-theta) P(Po(cx) >= r) + theta - x`.
pub fn f_boundary(x: f64, c: f64, theta: f64, r: u32) -> f64 {
    1.0 - x - (1.0 - theta) * poisson_cdf_below(c * x, r)
}

fn check_c_theta(c: f64, theta: f64) -> Result<()> {
    if !(c >= 0.0) {
        return Err(domain("c", c, "c >= 0"));
    }
    if !(0.0..=1.0).contains(&theta) {
        return Err(domain("theta", theta, "0 <= theta <= 1"));
    }
    Ok(())
}

/// Sorted roots of `f(., c, theta) = 0` on [0,1]. Sign changes on a fine grid
/// are bisected; tangencies (fold points) are caught as grid-local extrema of
/// `f` that touch zero. Roots closer than 1e-8 are merged.
pub fn boundary_roots(c: f64, theta: f64, r: u32) -> Result<Vec<f64>> {
    check_c_theta(c, theta)?;
    let f = |x: f64| f_boundary(x, c, theta, r);
    let xs: Vec<f64> = (0..=ROOT_GRID).map(|i| i as f64 / ROOT_GRID as f64).collect();
    let fs: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let mut roots = Vec::new();
    for i in 0..xs.len() {
        if fs[i] == 0.0 {
            roots.push(xs[i]);
        }
        if i + 1 < xs.len() && fs[i] != 0.0 && fs[i + 1] != 0.0 && fs[i].signum() != fs[i + 1].signum() {
            roots.push(bisect("f(x,c,theta)", f, xs[i], xs[i + 1], 0.0, ROOT_TOL)?);
        }
        if i > 0 && i + 1 < xs.len() {
            let (l, m, h) = (fs[i - 1], fs[i], fs[i + 1]);
            if m > 0.0 && m <= l && m <= h {
                let (x, v) = golden_min(f, xs[i - 1], xs[i + 1], 1e-14);
                if v.abs() < 1e-10 {
                    roots.push(x);
                }
            } else if m < 0.0 && m >= l && m >= h {
                let (x, v) = golden_min(|x| -f(x), xs[i - 1], xs[i + 1], 1e-14);
                if v.abs() < 1e-10 {
                    roots.push(x);
                }
            }
        }
    }
    roots.sort_by(f64::total_cmp);
    let mut merged: Vec<f64> = Vec::with_capacity(roots.len());
    for x in roots {
        match merged.last() {
            Some(&last) if x - last < MERGE_TOL => {}
            _ => merged.push(x),
        }
    }
    Ok(merged)
}

/// Fold structure of `f` for `c > c_r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fold {
    /// Upper fold: the smallest root jumps here.
    pub theta_c: f64,
    /// Lower fold (clamped at 0).
    pub theta_cq: f64,
    /// Double root at `theta_c` (the small cluster).
    pub x_fold_low: f64,
    /// Other root at `theta_c` (the large cluster).
    pub x_fold_high: f64,
}

/// Locates the fold points via `h(y) = y - g(y)/g'(y) = c` with
/// `g(y) = P(Po(y) <= r-1)`; `h` decreases on (0, r-1] and increases after.
pub fn theta_fold(c: f64, r: u32) -> Result<Fold> {
    let cr = c_r(r);
    if !(c >= cr - 1e-12) {
        return Err(Error::NoFold { c, c_r: cr });
    }
    let y_min = (r - 1) as f64;
    let ln_fact = ln_factorial(r - 1);
    // h(y) - c, with g/g' expanded to avoid overflow in e^y.
    let h = |y: f64| y + poisson_cdf_below(y, r) * (ln_fact + y - y_min * y.ln()).exp() - c;
    let (y1, y2) = if h(y_min) >= 0.0 {
        (y_min, y_min)
    } else {
        let y1 = bisect("h(y) = c (low)", h, 1e-12 * y_min, y_min, 1e-15, 0.0)?;
        let y2 = bisect("h(y) = c (high)", h, y_min, c.max(y_min + 1.0), 1e-15, 0.0)?;
        (y1, y2)
    };
    let vartheta = |x: f64| 1.0 - (1.0 - x) / poisson_cdf_below(c * x, r);
    let x_fold_low = y1 / c;
    let theta_c = vartheta(x_fold_low);
    let theta_cq = vartheta(y2 / c).max(0.0);
    // vartheta increases on [y2/c, 1] from its minimum to 1.
    let x_fold_high = if y1 == y2 {
        x_fold_low
    } else {
        bisect("vartheta(x) = theta_c", |x| vartheta(x) - theta_c, y2 / c, 1.0, 0.0, ROOT_TOL)?
    };
    Ok(Fold {
        theta_c,
        theta_cq,
        x_fold_low,
        x_fold_high,
    })
}

/// Root structure of the sparse regime for one `(c, theta)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryReport {
    pub c: f64,
    pub theta: f64,
    pub r: u32,
    pub c_r: f64,
    pub roots: Vec<f64>,
    pub x0: f64,
    pub x1: f64,
    pub fold: Option<Fold>,
    pub theta_cc: f64,
}

pub fn boundary_report(c: f64, theta: f64, r: u32) -> Result<BoundaryReport> {
    let roots = boundary_roots(c, theta, r)?;
    let cr = c_r(r);
    let fold = if c > cr { Some(theta_fold(c, r)?) } else { None };
    Ok(BoundaryReport {
        c,
        theta,
        r,
        c_r: cr,
        x0: roots[0],
        x1: *roots.last().unwrap(),
        roots,
        fold,
        theta_cc: theta_cc(r),
    })
}

/// Monte Carlo estimate of the survival probability of the walk
/// `a + sum_{j<=k} (xi_j - 1)`, `xi_k ~ Po(C(k-1, r-1) c^r)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZetaEstimate {
    pub walks: u64,
    pub survived: u64,
    pub zeta: f64,
    /// Relative frequency of extinction at step `k`.
    pub hitting: BTreeMap<u64, f64>,
}

impl ZetaEstimate {
    pub fn standard_error(&self) -> f64 {
        (self.zeta * (1.0 - self.zeta) / self.walks as f64).sqrt()
    }
}

/// Runs one walk. Returns `None` on escape, `Some(k)` on extinction at step k.
///
/// A walk escapes once the Poisson mean is at least 4 and its height exceeds
/// `20 sqrt(k)`: from there the drift only grows and a return to 0 has
/// negligible probability.
fn walk<R: Rng>(a: u64, c: f64, r: u32, rng: &mut R) -> Option<u64> {
    let cr = c.powi(r as i32);
    let mut height = a as i64;
    let mut k: u64 = 0;
    loop {
        k += 1;
        let lambda = choose(k - 1, r - 1) * cr;
        let xi = if lambda > 0.0 {
            Poisson::new(lambda).expect("finite positive mean").sample(rng) as i64
        } else {
            0
        };
        height += xi - 1;
        if height <= 0 {
            return Some(k);
        }
        if lambda >= 4.0 && height as f64 > 20.0 * (k as f64).sqrt() {
            return None;
        }
    }
}

fn choose(n: u64, k: u32) -> f64 {
    if (k as u64) > n {
        return 0.0;
    }
    (0..k as u64).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Estimates `zeta(a, c)`. Walk `i` draws from stream `i` of `seed`, so
/// estimates for different `a` under the same seed are pathwise coupled.
pub fn zeta_estimate(a: u64, c: f64, r: u32, walks: u64, seed: u64) -> Result<ZetaEstimate> {
    if a < r as u64 {
        return Err(domain("a", a as f64, "a >= r"));
    }
    if !(c > 0.0) {
        return Err(domain("c", c, "c > 0"));
    }
    let mut survived = 0u64;
    let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
    for i in 0..walks {
        let mut rng = Seed::new(seed, i).rng();
        match walk(a, c, r, &mut rng) {
            None => survived += 1,
            Some(k) => *counts.entry(k).or_default() += 1,
        }
    }
    let w = walks as f64;
    Ok(ZetaEstimate {
        walks,
        survived,
        zeta: survived as f64 / w,
        hitting: counts.into_iter().map(|(k, v)| (k, v as f64 / w)).collect(),
    })
}
