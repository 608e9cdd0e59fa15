//! Poisson and binomial tail probabilities used throughout.

use crate::error::{domain, Result};

/// `ln k!` for small `k`; exact summation keeps the low-order digits.
pub(crate) fn ln_factorial(k: u32) -> f64 {
    (2..=k).map(|i| (i as f64).ln()).sum()
}

/// `ln C(t, j)` for small `j`, valid for very large `t`.
fn ln_choose_small(t: u64, j: u32) -> f64 {
    (0..j as u64).map(|i| ((t - i) as f64).ln()).sum::<f64>() - ln_factorial(j)
}

/// `P(Po(y) = k)`.
pub fn poisson_pmf(k: u64, y: f64) -> f64 {
    if y == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    (k as f64 * y.ln() - y - libm::lgamma(k as f64 + 1.0)).exp()
}

/// `P(Po(y) <= r - 1)`, summed directly (no cancellation).
pub fn poisson_cdf_below(y: f64, r: u32) -> f64 {
    let mut term = (-y).exp();
    let mut sum = term;
    for j in 1..r {
        term *= y / j as f64;
        sum += term;
    }
    sum.min(1.0)
}

/// Upper Poisson tail `psi(y) = P(Po(y) >= r)`.
///
/// Below `y = r` the tail series is summed directly from `j = r`, where the
/// terms shrink geometrically; above it the complementary finite sum has no
/// cancellation problem.
pub fn psi(y: f64, r: u32) -> Result<f64> {
    if !(y >= 0.0) {
        return Err(domain("y", y, "y >= 0"));
    }
    Ok(psi_unchecked(y, r))
}

pub(crate) fn psi_unchecked(y: f64, r: u32) -> f64 {
    if y == 0.0 {
        return 0.0;
    }
    if y < r as f64 {
        let mut term = (r as f64 * y.ln() - y - ln_factorial(r)).exp();
        let mut sum = 0.0;
        let mut j = r as f64;
        while term > 0.0 {
            sum += term;
            if term < 1e-18 * sum {
                break;
            }
            j += 1.0;
            term *= y / j;
        }
        sum.min(1.0)
    } else {
        (1.0 - poisson_cdf_below(y, r)).max(0.0)
    }
}

/// Derivative `psi'(y) = y^(r-1) e^(-y) / (r-1)!`.
#[cfg(test)]
pub(crate) fn psi_prime(y: f64, r: u32) -> f64 {
    if y == 0.0 {
        return 0.0;
    }
    ((r - 1) as f64 * y.ln() - y - ln_factorial(r - 1)).exp()
}

/// `pi(t) = P(Bin(t, p) >= r)`, the probability that a vertex has been
/// activated by time `t`.
pub fn pi_binom(t: u64, p: f64, r: u32) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(domain("p", p, "0 <= p <= 1"));
    }
    Ok(pi_binom_unchecked(t, p, r))
}

/// `pi` at a real time, using `floor(t)`.
pub fn pi_binom_real(t: f64, p: f64, r: u32) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(domain("t", t, "t >= 0"));
    }
    pi_binom(t.floor() as u64, p, r)
}

pub(crate) fn pi_binom_unchecked(t: u64, p: f64, r: u32) -> f64 {
    let r64 = r as u64;
    if t < r64 || p == 0.0 {
        return 0.0;
    }
    if p == 1.0 {
        return 1.0;
    }
    let ln_q = (-p).ln_1p();
    let odds = p / (1.0 - p);
    if (t as f64) * p < r as f64 {
        // Upper tail from j = r.
        let mut term = (ln_choose_small(t, r) + r as f64 * p.ln() + (t - r64) as f64 * ln_q).exp();
        let mut sum = 0.0;
        let mut j = r64;
        loop {
            sum += term;
            if j == t {
                break;
            }
            let ratio = (t - j) as f64 / (j + 1) as f64 * odds;
            term *= ratio;
            j += 1;
            if ratio < 1.0 && term < 1e-18 * sum {
                break;
            }
        }
        sum.min(1.0)
    } else {
        let mut lower = 0.0;
        for j in 0..r {
            lower += (ln_choose_small(t, j) + j as f64 * p.ln() + (t - j as u64) as f64 * ln_q).exp();
        }
        (1.0 - lower).max(0.0)
    }
}

/// Negative binomial mass `P(Y = k) = C(k-1, r-1) p^r (1-p)^(k-r)`:
/// the r-th success falls on trial `k`.
pub fn nbinom_pmf(k: u64, r: u32, p: f64) -> f64 {
    let r64 = r as u64;
    if k < r64 || p == 0.0 {
        return 0.0;
    }
    if p == 1.0 {
        return if k == r64 { 1.0 } else { 0.0 };
    }
    (ln_choose_small(k - 1, r - 1) + r as f64 * p.ln() + (k - r64) as f64 * (-p).ln_1p()).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct binomial tail with exact integer binomial coefficients.
    fn binom_tail_oracle(t: u64, p: f64, r: u32) -> f64 {
        let mut c = 1.0f64;
        let mut sum = 0.0;
        for j in 0..=t {
            if j > 0 {
                c = c * (t - j + 1) as f64 / j as f64;
            }
            if j >= r as u64 {
                sum += c * p.powi(j as i32) * (1.0 - p).powi((t - j) as i32);
            }
        }
        sum
    }

    #[test]
    fn psi_closed_forms() {
        assert_eq!(psi(0.0, 3).unwrap(), 0.0);
        for &y in &[1e-6, 1e-3, 0.1, 0.5, 1.0, 2.0, 5.0, 30.0] {
            let closed = 1.0 - (-y as f64).exp() * (1.0 + y);
            let got = psi(y, 2).unwrap();
            assert!((got - closed).abs() <= 1e-12 * closed.max(1e-300) + 1e-15, "y={y}: {got} vs {closed}");
        }
        let expected = 1.0 - 2.0 / std::f64::consts::E;
        assert!((psi(1.0, 2).unwrap() - expected).abs() < 1e-15);
        assert!((expected - 0.264241).abs() < 1e-6);
    }

    #[test]
    fn psi_small_argument_is_accurate() {
        // psi(y, 2) ~ y^2/2 - y^3/3 for tiny y; the complement would lose every digit.
        let y = 1e-9;
        let series = y * y / 2.0 - y * y * y / 3.0;
        assert!((psi(y, 2).unwrap() / series - 1.0).abs() < 1e-12);
    }

    #[test]
    fn psi_rejects_negative() {
        assert!(psi(-0.1, 2).is_err());
    }

    #[test]
    fn pi_binom_examples() {
        assert_eq!(pi_binom(1, 0.4, 2).unwrap(), 0.0);
        assert!((pi_binom(2, 0.3, 2).unwrap() - 0.09).abs() < 1e-15);
        let expected = 1.0 - 0.7f64.powi(5) - 5.0 * 0.3 * 0.7f64.powi(4);
        assert!((expected - 0.47178).abs() < 1e-12);
        assert!((pi_binom(5, 0.3, 2).unwrap() - expected).abs() < 1e-15);
        assert!((pi_binom_real(5.9, 0.3, 2).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn pi_binom_matches_direct_sum() {
        for &(t, p, r) in &[(10u64, 0.01, 2u32), (40, 0.2, 3), (100, 0.5, 4), (60, 0.05, 2), (7, 0.9, 3)] {
            let got = pi_binom(t, p, r).unwrap();
            let want = binom_tail_oracle(t, p, r);
            assert!((got - want).abs() < 1e-13 * want.max(1e-280) + 1e-16, "t={t} p={p} r={r}: {got} vs {want}");
        }
    }

    #[test]
    fn nbinom_examples() {
        assert!((nbinom_pmf(2, 2, 0.3) - 0.09).abs() < 1e-15);
        assert!((nbinom_pmf(3, 2, 0.5) - 0.25).abs() < 1e-15);
        assert_eq!(nbinom_pmf(1, 2, 0.5), 0.0);
        let total: f64 = (3..2000).map(|k| nbinom_pmf(k, 3, 0.05)).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn nbinom_cdf_is_pi() {
        // P(Y <= t) = P(Bin(t,p) >= r).
        for t in 0..60u64 {
            let cdf: f64 = (0..=t).map(|k| nbinom_pmf(k, 3, 0.1)).sum();
            assert!((cdf - pi_binom(t, 0.1, 3).unwrap()).abs() < 1e-14);
        }
    }

    #[test]
    fn poisson_pieces() {
        assert!((poisson_pmf(1, 1.0) - (-1.0f64).exp()).abs() < 1e-15);
        assert!((poisson_cdf_below(2.0, 3) - 5.0 * (-2.0f64).exp()).abs() < 1e-15);
        assert!((psi_prime(2.0, 2) - 2.0 * (-2.0f64).exp()).abs() < 1e-15);
    }
}
