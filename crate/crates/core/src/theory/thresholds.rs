//! Critical quantities for the regime 1/n << p << n^(-1/r).

use serde::{Deserialize, Serialize};

use super::optimize::{bisect, grid_then_golden, linear_grid, mixed_grid};
use super::special::{ln_factorial, psi_unchecked};
use crate::error::{domain, Error, Result};

const MIN_GRID: usize = 1024;
const REFINE_TOL: f64 = 1e-10;

fn check_p(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(domain("p", p, "0 < p < 1"))
    }
}

/// `t_c = ((r-1)! / (n p^r))^(1/(r-1))`.
pub fn critical_time(n: f64, p: f64, r: u32) -> f64 {
    let rf = r as f64;
    ((ln_factorial(r - 1) - n.ln() - rf * p.ln()) / (rf - 1.0)).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub t_c: f64,
    pub a_c: f64,
    pub b_c: f64,
}

/// Critical time, critical initial size, and expected count of vertices with
/// degree below `r`.
pub fn thresholds(n: usize, p: f64, r: u32) -> Result<Thresholds> {
    check_p(p)?;
    let nf = n as f64;
    let t_c = critical_time(nf, p, r);
    let a_c = (1.0 - 1.0 / r as f64) * t_c;
    let np = nf * p;
    let b_c = (nf.ln() + (r - 1) as f64 * np.ln() - ln_factorial(r - 1) - np).exp();
    Ok(Thresholds { t_c, a_c, b_c })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefinedCritical {
    pub a_c_star: f64,
    pub t_c_star: f64,
    /// The minimised function was flat on the grid; `t_c_star` is a grid point.
    pub degenerate: bool,
    /// Same minimisation taken over `t <= n/2`.
    pub a_c_star_wide: f64,
    pub t_c_star_wide: f64,
    /// The two ranges disagree (possible at small n).
    pub range_discrepancy: bool,
}

/// `a_c* = -min_{t <= 3 t_c} (n psi(tp) - t) / (1 - psi(tp))`, with `t_c*`
/// the minimiser.
pub fn refined_critical(n: usize, p: f64, r: u32) -> Result<RefinedCritical> {
    check_p(p)?;
    let nf = n as f64;
    let t_c = critical_time(nf, p, r);
    if t_c < 1.0 {
        return Err(domain("t_c", t_c, "t_c >= 1"));
    }
    let objective = |t: f64| {
        let s = psi_unchecked(t * p, r);
        (nf * s - t) / (1.0 - s)
    };
    let narrow = grid_then_golden(objective, &linear_grid(0.0, 3.0 * t_c, 4 * MIN_GRID), REFINE_TOL);
    let wide_hi = (nf / 2.0).max(3.0 * t_c);
    let mut wide_grid = mixed_grid(wide_hi, 2 * MIN_GRID);
    wide_grid.extend(linear_grid(0.0, 3.0 * t_c, MIN_GRID));
    wide_grid.sort_by(f64::total_cmp);
    wide_grid.dedup();
    let wide = grid_then_golden(objective, &wide_grid, REFINE_TOL);
    let a_c_star = -narrow.value;
    let a_c_star_wide = -wide.value;
    Ok(RefinedCritical {
        a_c_star,
        t_c_star: narrow.x,
        degenerate: narrow.flat,
        a_c_star_wide,
        t_c_star_wide: wide.x,
        range_discrepancy: (a_c_star - a_c_star_wide).abs() > 1e-9 * a_c_star.abs().max(1.0),
    })
}

/// `p_c = ((r-1)^(r-1) (r-1)! / r^(r-1))^(1/r) (n a^(r-1))^(-1/r)`.
pub fn pc(n: usize, a: usize, r: u32) -> Result<f64> {
    if a < 1 {
        return Err(domain("a", a as f64, "a >= 1"));
    }
    let rf = r as f64;
    let r1 = rf - 1.0;
    let ln_const = r1 * r1.ln() + ln_factorial(r - 1) - r1 * rf.ln();
    let ln_scale = (n as f64).ln() + r1 * (a as f64).ln();
    Ok(((ln_const - ln_scale) / rf).exp())
}

/// `h_a(p) = inf_{t <= n/2} ((n-a) psi(tp) - t)`.
pub fn h_a(n: usize, a: usize, p: f64, r: u32) -> f64 {
    let nf = n as f64;
    let m = (n - a.min(n)) as f64;
    let hi = nf / 2.0;
    let mut grid = mixed_grid(hi, 2 * MIN_GRID);
    // Dense linear coverage around the expected bottleneck at ~t_c.
    let t_c = critical_time(nf, p, r);
    if t_c.is_finite() && 3.0 * t_c < hi {
        grid.extend(linear_grid(0.0, 3.0 * t_c, MIN_GRID));
        grid.sort_by(f64::total_cmp);
        grid.dedup();
    }
    grid_then_golden(|t| m * psi_unchecked(t * p, r) - t, &grid, 1e-12).value
}

/// Solves `h_a(p) = -a` for `p`; the dual of `a_c*`.
pub fn pcx(n: usize, a: usize, r: u32) -> Result<f64> {
    if a < 1 || a >= n {
        return Err(domain("a", a as f64, "1 <= a < n"));
    }
    let nf = n as f64;
    let af = a as f64;
    let residual = |ln_p: f64| h_a(n, a, ln_p.exp(), r) + af;
    let mut lo = (1.0 / (10.0 * nf)).ln();
    let mut hi = (10.0 * nf.powf(-1.0 / r as f64)).min(0.999_999).ln();
    for _ in 0..20 {
        if residual(lo) <= 0.0 {
            break;
        }
        lo -= 10f64.ln();
    }
    for _ in 0..20 {
        if residual(hi) >= 0.0 || hi >= -1e-6 {
            break;
        }
        hi = (hi + 10f64.ln()).min(-1e-6);
    }
    // Relative 1e-12 in p is absolute 1e-12 in ln p.
    let ln_p = bisect("h_a(p) + a", residual, lo, hi, 0.0, 1e-12).map_err(|e| match e {
        Error::Bracket { what, lo, hi, f_lo, f_hi } => Error::Bracket {
            what,
            lo: lo.exp(),
            hi: hi.exp(),
            f_lo,
            f_hi,
        },
        other => other,
    })?;
    Ok(ln_p.exp())
}

/// Unique root in [0,1] of `r phi - phi^r = (r-1) alpha`.
pub fn phi(alpha: f64, r: u32) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(domain("alpha", alpha, "0 <= alpha <= 1"));
    }
    if alpha == 0.0 {
        return Ok(0.0);
    }
    if alpha == 1.0 {
        return Ok(1.0);
    }
    let rf = r as f64;
    let target = (rf - 1.0) * alpha;
    bisect(
        "phi",
        |x| rf * x - x.powi(r as i32) - target,
        0.0,
        1.0,
        0.0,
        1e-16,
    )
}

/// `phi_1(alpha) = (r/(r-1)) phi(alpha) / alpha`, the limit of `A*/a`.
pub fn phi1(alpha: f64, r: u32) -> Result<f64> {
    let rf = r as f64;
    if alpha == 0.0 {
        return Ok(1.0);
    }
    Ok(rf / (rf - 1.0) * phi(alpha, r)? / alpha)
}

/// `phi_2(alpha) = phi^r (1 - phi^(r-1))^(-2) / r`, the subcritical variance
/// constant in units of `t_c`.
pub fn phi2(alpha: f64, r: u32) -> Result<f64> {
    let f = phi(alpha, r)?;
    let rf = r as f64;
    Ok(f.powi(r as i32) / (1.0 - f.powi(r as i32 - 1)).powi(2) / rf)
}

/// Smallest positive root of `a + (n-a) psi(tp) - t = 0`, searched on
/// `(0, t_c*]`.
pub fn t_star(n: usize, p: f64, a: usize, r: u32) -> Result<f64> {
    let refined = refined_critical(n, p, r)?;
    t_star_with(n, p, a, r, refined.t_c_star)
}

pub(crate) fn t_star_with(n: usize, p: f64, a: usize, r: u32, t_c_star: f64) -> Result<f64> {
    let m = (n - a.min(n)) as f64;
    let af = a as f64;
    let gamma = |t: f64| af + m * psi_unchecked(t * p, r) - t;
    let grid = linear_grid(0.0, t_c_star, 4096);
    for w in grid.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if gamma(hi) <= 0.0 {
            if lo == 0.0 && af == 0.0 {
                return Ok(0.0);
            }
            return bisect("t_*", gamma, lo, hi, 1e-10, 0.0);
        }
    }
    Err(Error::NoSubcriticalRoot)
}

/// The deterministic terms of the generation-count formula.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TauPrediction {
    /// Generations spent passing the bottleneck near `t_c`.
    pub bottleneck: f64,
    /// Doubly exponential growth phase.
    pub growth: f64,
    /// Sweeping up the last vertices.
    pub final_sweep: f64,
    pub total: f64,
}

/// Predicted number of generations for a supercritical start.
pub fn tau_prediction(n: usize, p: f64, a: usize, r: u32) -> Result<TauPrediction> {
    let refined = refined_critical(n, p, r)?;
    tau_prediction_with(n, p, a, r, refined.a_c_star)
}

pub(crate) fn tau_prediction_with(n: usize, p: f64, a: usize, r: u32, a_c_star: f64) -> Result<TauPrediction> {
    let th = thresholds(n, p, r)?;
    let af = a as f64;
    if af <= a_c_star {
        return Err(Error::NotSupercritical { a: af, a_c_star });
    }
    let np = n as f64 * p;
    if np <= 1.0 {
        return Err(domain("np", np, "np > 1"));
    }
    let rf = r as f64;
    let bottleneck = std::f64::consts::PI * 2f64.sqrt() / (rf - 1.0).sqrt() * (th.t_c / (af - a_c_star)).sqrt();
    let log_plus = |x: f64| if x > 1.0 { x.ln() } else { 0.0 };
    let growth = (np.ln().ln() - log_plus((af / th.a_c).ln())) / rf.ln();
    let final_sweep = (n as f64).ln() / np;
    Ok(TauPrediction {
        bottleneck,
        growth,
        final_sweep,
        total: bottleneck + growth + final_sweep,
    })
}

/// Everything computable for a given `(n, p, a, r)`; entries that need a
/// missing input, or that are undefined in the current regime, are `None`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TheoryReport {
    pub n: usize,
    pub r: u32,
    pub p: Option<f64>,
    pub a: Option<usize>,
    pub t_c: Option<f64>,
    pub a_c: Option<f64>,
    pub b_c: Option<f64>,
    pub t_c_star: Option<f64>,
    pub a_c_star: Option<f64>,
    pub a_c_star_wide: Option<f64>,
    pub range_discrepancy: Option<bool>,
    pub p_c: Option<f64>,
    pub p_c_star: Option<f64>,
    pub t_star: Option<f64>,
    pub tau_prediction: Option<TauPrediction>,
}

pub fn theory_report(n: usize, p: Option<f64>, a: Option<usize>, r: u32) -> Result<TheoryReport> {
    if p.is_none() && a.is_none() {
        return Err(Error::InvalidParams("at least one of p and a is required".into()));
    }
    let mut report = TheoryReport {
        n,
        r,
        p,
        a,
        ..Default::default()
    };
    if let Some(p) = p {
        let th = thresholds(n, p, r)?;
        report.t_c = Some(th.t_c);
        report.a_c = Some(th.a_c);
        report.b_c = Some(th.b_c);
        if th.t_c >= 1.0 {
            let refined = refined_critical(n, p, r)?;
            report.t_c_star = Some(refined.t_c_star);
            report.a_c_star = Some(refined.a_c_star);
            report.a_c_star_wide = Some(refined.a_c_star_wide);
            report.range_discrepancy = Some(refined.range_discrepancy);
            if let Some(a) = a {
                if (a as f64) <= refined.a_c_star {
                    report.t_star = t_star_with(n, p, a, r, refined.t_c_star).ok();
                } else {
                    report.tau_prediction = tau_prediction_with(n, p, a, r, refined.a_c_star).ok();
                }
            }
        }
    }
    if let Some(a) = a {
        if a >= 1 {
            report.p_c = Some(pc(n, a, r)?);
            if a < n {
                report.p_c_star = pcx(n, a, r).ok();
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn thresholds_r2_plug_in() {
        let th = thresholds(1_000_000, 2e-5, 2).unwrap();
        assert!(rel(th.t_c, 2500.0) < 1e-12);
        assert!(rel(th.a_c, 1250.0) < 1e-12);
    }

    #[test]
    fn a_c_over_t_c_ratio() {
        for r in 2..6 {
            let th = thresholds(123_456, 3e-4, r).unwrap();
            assert!(rel(th.a_c / th.t_c, 1.0 - 1.0 / r as f64) < 1e-14);
        }
    }

    #[test]
    fn b_c_plug_in() {
        let n = 100_000usize;
        let np = 13.956;
        let th = thresholds(n, np / n as f64, 2).unwrap();
        let oracle = n as f64 * np * (-np as f64).exp();
        assert!(rel(th.b_c, oracle) < 1e-12);
        assert!((th.b_c - 1.21).abs() < 0.01);
    }

    #[test]
    fn critical_time_identity() {
        // n (p t_c)^r / r! = t_c / r
        for &(n, p, r) in &[(1e6, 2e-5, 2u32), (1e8, 1e-6, 3), (5e4, 1e-3, 4)] {
            let t = critical_time(n, p, r);
            let fact: f64 = (1..=r).map(|i| i as f64).product();
            let lhs = n * (p * t).powi(r as i32) / fact;
            assert!(rel(lhs, t / r as f64) < 1e-12);
        }
    }

    #[test]
    fn thresholds_reject_degenerate_p() {
        assert!(thresholds(10, 0.0, 2).is_err());
        assert!(thresholds(10, 1.0, 2).is_err());
    }

    #[test]
    fn refined_critical_near_a_c() {
        let rc = refined_critical(1_000_000, 2e-5, 2).unwrap();
        let ratio = rc.a_c_star / 1250.0;
        assert!((0.95..=1.05).contains(&ratio), "{ratio}");
        assert!(rc.t_c_star >= 2500.0);
        assert!(!rc.degenerate);
        assert!(!rc.range_discrepancy, "{rc:?}");
    }

    #[test]
    fn refined_critical_shift_expansion() {
        // t_c* - t_c ~ p t_c^2 / (r-1)
        let (n, p) = (100_000_000usize, 1e-6);
        let rc = refined_critical(n, p, 2).unwrap();
        let t_c = critical_time(n as f64, p, 2);
        let predicted = p * t_c * t_c;
        assert!(rel(rc.t_c_star - t_c, predicted) < 0.2, "{} vs {}", rc.t_c_star - t_c, predicted);
    }

    #[test]
    fn pc_closed_form() {
        assert!(rel(pc(10_000, 100, 2).unwrap(), (2e6f64).powf(-0.5)) < 1e-13);
        assert!(rel(pc(10_000, 100, 2).unwrap(), 7.071e-4) < 1e-4);
        for &(n, a) in &[(1000usize, 3usize), (1 << 20, 777)] {
            assert!(rel(pc(n, a, 2).unwrap(), 1.0 / (2.0 * n as f64 * a as f64).sqrt()) < 1e-13);
        }
    }

    #[test]
    fn pc_inverts_a_c() {
        let (n, a) = (100_000_000usize, 10_000usize);
        for r in 2..5 {
            let p = pc(n, a, r).unwrap();
            let th = thresholds(n, p, r).unwrap();
            assert!((0.99..=1.01).contains(&(th.a_c / a as f64)), "r={r}");
        }
    }

    #[test]
    fn pcx_residual_and_inverse() {
        let (n, a) = (1_000_000usize, 1000usize);
        let p = pcx(n, a, 2).unwrap();
        let ratio = p / pc(n, a, 2).unwrap();
        assert!((0.95..=1.05).contains(&ratio), "{ratio}");
        assert!((h_a(n, a, p, 2) + a as f64).abs() <= 1e-6 * a as f64);
        let rc = refined_critical(n, p, 2).unwrap();
        assert!(rel(rc.a_c_star, a as f64) < 1e-3, "{}", rc.a_c_star);
    }

    #[test]
    fn p_to_a_c_star_round_trip() {
        let n = 1_000_000usize;
        let p = 2e-5;
        let a_star = refined_critical(n, p, 2).unwrap().a_c_star;
        let back = pcx(n, a_star.round() as usize, 2).unwrap();
        assert!(rel(back, p) < 1e-3, "{back}");
    }

    #[test]
    fn h_a_increasing_in_p() {
        let (n, a) = (100_000usize, 50usize);
        let hs: Vec<f64> = [1e-5, 1e-4, 3e-4, 1e-3, 1e-2].iter().map(|&p| h_a(n, a, p, 2)).collect();
        assert!(hs.windows(2).all(|w| w[0] <= w[1]), "{hs:?}");
    }

    #[test]
    fn phi_values() {
        assert_eq!(phi(0.0, 3).unwrap(), 0.0);
        assert_eq!(phi(1.0, 3).unwrap(), 1.0);
        assert!((phi(0.75, 2).unwrap() - 0.5).abs() < 1e-12);
        assert!(phi(1.5, 2).is_err());
        for &alpha in &[0.1, 0.5, 0.9] {
            assert!((phi(alpha, 2).unwrap() - (1.0 - (1.0f64 - alpha).sqrt())).abs() < 1e-12);
        }
    }

    #[test]
    fn phi_satisfies_equation_and_is_monotone() {
        for r in 2..6u32 {
            let rf = r as f64;
            let mut prev_phi = -1.0;
            let mut prev_phi1 = 0.0;
            for i in 0..=1000 {
                let alpha = i as f64 / 1000.0;
                let f = phi(alpha, r).unwrap();
                assert!((rf * f - f.powi(r as i32) - (rf - 1.0) * alpha).abs() < 1e-12);
                assert!(f >= prev_phi);
                prev_phi = f;
                let f1 = phi1(alpha, r).unwrap();
                assert!(f1 >= prev_phi1 - 1e-9, "phi1 decreasing at {alpha}");
                prev_phi1 = f1;
            }
            assert_eq!(phi1(0.0, r).unwrap(), 1.0);
            assert!((phi1(1.0, r).unwrap() - rf / (rf - 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn phi2_r2_closed_form() {
        let f = 1.0 - 0.5f64.sqrt();
        let want = f * f / (1.0 - f).powi(2) / 2.0;
        assert!((phi2(0.5, 2).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn t_star_tracks_phi() {
        let (n, p, a) = (1_000_000usize, 2e-5, 625usize);
        let ts = t_star(n, p, a, 2).unwrap();
        let ratio = ts / (phi(0.5, 2).unwrap() * 2500.0);
        assert!((0.98..=1.02).contains(&ratio), "{ratio}");
        let residual = a as f64 + (n - a) as f64 * psi_unchecked(p * ts, 2) - ts;
        assert!(residual.abs() <= 1e-6 * ts);
    }

    #[test]
    fn t_star_near_critical_expansion() {
        let (n, p) = (1_000_000usize, 2e-5);
        let rc = refined_critical(n, p, 2).unwrap();
        let t_c = 2500.0;
        let a = (rc.a_c_star - (1250.0f64).sqrt()).floor();
        let ts = t_star(n, p, a as usize, 2).unwrap();
        let predicted = (2.0 * t_c * (rc.a_c_star - a)).sqrt();
        assert!(rel(rc.t_c_star - ts, predicted) < 0.1, "{} vs {predicted}", rc.t_c_star - ts);
    }

    #[test]
    fn t_star_rejects_supercritical() {
        assert_eq!(t_star(1_000_000, 2e-5, 2500, 2), Err(Error::NoSubcriticalRoot));
    }

    #[test]
    fn tau_prediction_terms() {
        let (n, p) = (1_000_000usize, 2e-5);
        let rc = refined_critical(n, p, 2).unwrap();
        let tp = tau_prediction(n, p, 2500, 2).unwrap();
        let first = std::f64::consts::PI * 2f64.sqrt() * (2500.0 / (2500.0 - rc.a_c_star)).sqrt();
        assert!(rel(tp.bottleneck, first) < 1e-12);
        assert!((tp.bottleneck - 6.3).abs() < 0.2);
        assert!((tp.growth - 20f64.ln().ln() / 2f64.ln()).abs() < 1e-12);
        assert!((tp.growth - 1.58).abs() < 0.01);
        assert!((tp.final_sweep - (1e6f64).ln() / 20.0).abs() < 1e-12);
        assert!(matches!(tau_prediction(n, p, 1000, 2), Err(Error::NotSupercritical { .. })));
    }

    #[test]
    fn tau_prediction_regimes() {
        // p = n^-0.7: the growth term ~ log log n / log r dominates.
        let n = 1_000_000usize;
        let p = (n as f64).powf(-0.7);
        let a = (2.0 * thresholds(n, p, 2).unwrap().a_c).round() as usize;
        let tp = tau_prediction(n, p, a, 2).unwrap();
        let lln = (n as f64).ln().ln() / 2f64.ln();
        assert!((tp.total - lln).abs() < 8.0, "{tp:?} vs {lln}");
        assert!(tp.growth > tp.final_sweep);

        // p = log log n / n: the final sweep term is log n / log log n.
        let n = 100_000_000usize;
        let lln = (n as f64).ln().ln();
        let p = lln / n as f64;
        let a = (2.0 * thresholds(n, p, 2).unwrap().a_c).round() as usize;
        let tp = tau_prediction(n, p, a, 2).unwrap();
        assert!(rel(tp.final_sweep, (n as f64).ln() / lln) < 1e-12);
        assert!(tp.final_sweep > tp.growth, "{tp:?}");
    }

    #[test]
    fn report_needs_p_or_a() {
        assert!(theory_report(100, None, None, 2).is_err());
        let rep = theory_report(1_000_000, Some(2e-5), Some(2500), 2).unwrap();
        assert!(rep.tau_prediction.is_some() && rep.t_star.is_none());
        let rep = theory_report(1_000_000, Some(2e-5), Some(625), 2).unwrap();
        assert!(rep.t_star.is_some() && rep.tau_prediction.is_none());
        let rep = theory_report(10_000, None, Some(100), 2).unwrap();
        assert!(rep.p_c.is_some() && rep.t_c.is_none());
    }
}
