//! Exact law of the stopping time `T` (equal to the final size).
//!
//! Given `A(t) = k`, the number of vertices activating at step `t+1` is
//! `Bin(n - k, pi(t; 1))` with `pi(t; u) = (pi(t+u) - pi(t)) / (1 - pi(t))`,
//! so `A(t)` is a Markov chain and a forward pass over `(t, k)` gives the
//! whole distribution of `T`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::markproc::stopping_time;
use crate::params::Params;
use crate::theory::{nbinom_pmf, pi_binom};

/// Default largest `n` for [`exact_t_pmf`].
pub const DEFAULT_EXACT_CAP: usize = 400;

/// Largest instance accepted by [`enumerate_oracle`].
pub const ORACLE_MAX_FREE: usize = 5;
pub const ORACLE_MAX_N: usize = 12;

/// Probability mass function on `support_offset, support_offset + 1, ...`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pmf {
    pub support_offset: usize,
    pub masses: Vec<f64>,
    pub total: f64,
}

impl Pmf {
    /// Builds a pmf from dense masses indexed from 0, trimming zero ends.
    pub fn from_dense(dense: Vec<f64>) -> Self {
        let total = dense.iter().sum();
        let first = dense.iter().position(|&m| m != 0.0).unwrap_or(0);
        let last = dense.iter().rposition(|&m| m != 0.0).map_or(first, |i| i + 1);
        Pmf {
            support_offset: first,
            masses: dense[first..last.max(first)].to_vec(),
            total,
        }
    }

    pub fn point(k: usize) -> Self {
        Pmf {
            support_offset: k,
            masses: vec![1.0],
            total: 1.0,
        }
    }

    pub fn get(&self, k: usize) -> f64 {
        k.checked_sub(self.support_offset)
            .and_then(|i| self.masses.get(i))
            .copied()
            .unwrap_or(0.0)
    }

    /// Largest `k` with recorded mass (inclusive end of the support).
    pub fn support_end(&self) -> usize {
        self.support_offset + self.masses.len().saturating_sub(1)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.masses.iter().enumerate().map(move |(i, &m)| (self.support_offset + i, m))
    }

    pub fn mean(&self) -> f64 {
        self.iter().map(|(k, m)| k as f64 * m).sum::<f64>() / self.total
    }

    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        self.iter().map(|(k, m)| (k as f64 - mean).powi(2) * m).sum::<f64>() / self.total
    }

    /// `P(X >= k)`.
    pub fn tail(&self, k: usize) -> f64 {
        self.iter().filter(|&(j, _)| j >= k).map(|(_, m)| m).sum()
    }

    /// Writes `k,probability` rows under a header.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "k,probability")?;
        for (k, m) in self.iter() {
            writeln!(out, "{k},{m:e}")?;
        }
        Ok(())
    }
}

/// `P(Bin(t, p) <= r - 1)` summed directly.
fn binom_cdf_below(t: u64, p: f64, r: u32) -> f64 {
    if p == 0.0 {
        return 1.0;
    }
    if p == 1.0 {
        return if t < r as u64 { 1.0 } else { 0.0 };
    }
    let (ln_p, ln_q) = (p.ln(), (-p).ln_1p());
    let mut ln_c = 0.0;
    let mut sum = 0.0;
    for j in 0..(r as u64).min(t + 1) {
        if j > 0 {
            ln_c += ((t - j + 1) as f64 / j as f64).ln();
        }
        sum += (ln_c + j as f64 * ln_p + (t - j) as f64 * ln_q).exp();
    }
    sum.min(1.0)
}

/// Conditional probability that an inactive vertex at time `t` activates
/// during `(t, t+u]`.
pub fn step_prob(t: u64, p: f64, r: u32, u: u64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(crate::error::domain("p", p, "[0, 1]"));
    }
    let survive = binom_cdf_below(t, p, r);
    if survive <= 0.0 || pi_binom(t, p, r)? >= 1.0 {
        return Err(Error::State(format!("pi({t}) = 1: no inactive vertex can remain")));
    }
    let gained: f64 = (t + 1..=t + u).map(|k| nbinom_pmf(k, r, p)).sum();
    Ok((gained / survive).min(1.0))
}

/// `Bin(trials, q)` masses for `0..=trials`, grown outward from the mode.
fn binomial_row(trials: usize, q: f64, row: &mut Vec<f64>) {
    row.clear();
    row.resize(trials + 1, 0.0);
    if q <= 0.0 {
        row[0] = 1.0;
        return;
    }
    if q >= 1.0 {
        row[trials] = 1.0;
        return;
    }
    let nf = trials as f64;
    let mode = (((nf + 1.0) * q).floor() as usize).min(trials);
    let ln_mode = libm::lgamma(nf + 1.0) - libm::lgamma(mode as f64 + 1.0) - libm::lgamma((trials - mode) as f64 + 1.0)
        + mode as f64 * q.ln()
        + (trials - mode) as f64 * (-q).ln_1p();
    row[mode] = ln_mode.exp();
    let odds = q / (1.0 - q);
    for j in mode..trials {
        row[j + 1] = row[j] * (trials - j) as f64 / (j + 1) as f64 * odds;
    }
    for j in (0..mode).rev() {
        row[j] = row[j + 1] * (j + 1) as f64 / (trials - j) as f64 / odds;
    }
}

/// Exact pmf of `T` for `n <= DEFAULT_EXACT_CAP`.
pub fn exact_t_pmf(n: usize, p: f64, a: usize, r: u32) -> Result<Pmf> {
    exact_t_pmf_capped(n, p, a, r, DEFAULT_EXACT_CAP)
}

/// Forward pass over alive states `(t, k)` with `k = A(t) > t`; mass that
/// reaches `k = t + 1` at time `t + 1` is absorbed as `P(T = t + 1)`.
pub fn exact_t_pmf_capped(n: usize, p: f64, a: usize, r: u32, cap: usize) -> Result<Pmf> {
    Params::new(n, p, a, r).validate()?;
    if n > cap {
        return Err(Error::TooLarge(format!("exact pmf needs n <= {cap} (got {n})")));
    }
    if a == 0 {
        return Ok(Pmf::point(0));
    }
    let mut absorbed = vec![0.0; n + 1];
    let mut alive = vec![0.0; n + 1];
    let mut next = vec![0.0; n + 1];
    let mut row = Vec::new();
    alive[a] = 1.0;
    for t in 0..n {
        next.iter_mut().for_each(|m| *m = 0.0);
        let q = if alive[t + 1..n].iter().any(|&m| m > 0.0) {
            step_prob(t as u64, p, r, 1)?
        } else {
            0.0
        };
        let mut residual = 0.0;
        for k in t + 1..=n {
            let mass = alive[k];
            if mass == 0.0 {
                continue;
            }
            if k == n {
                next[n] += mass;
                continue;
            }
            binomial_row(n - k, q, &mut row);
            for (j, &w) in row.iter().enumerate() {
                next[k + j] += mass * w;
            }
        }
        absorbed[t + 1] += next[t + 1];
        next[t + 1] = 0.0;
        for &m in &next[t + 2..] {
            residual += m;
        }
        std::mem::swap(&mut alive, &mut next);
        if residual < 1e-15 {
            break;
        }
    }
    Ok(Pmf::from_dense(absorbed))
}

/// Exact pmf of `T` by summing over every assignment of activation times
/// in `{r..n} ∪ {Never}` to the `n - a` initially inactive vertices.
pub fn enumerate_oracle(n: usize, p: f64, a: usize, r: u32) -> Result<Pmf> {
    Params::new(n, p, a, r).validate()?;
    let free = n - a;
    if free > ORACLE_MAX_FREE || n > ORACLE_MAX_N {
        return Err(Error::TooLarge(format!(
            "enumeration needs n - a <= {ORACLE_MAX_FREE} and n <= {ORACLE_MAX_N} (got n={n}, a={a})"
        )));
    }
    if free == 0 {
        return Ok(Pmf::point(a.min(n)));
    }
    // Outcome index 0 is Never; index i >= 1 is time r + i - 1.
    let first = r as usize;
    let mut weights = vec![(1.0 - pi_binom(n as u64, p, r)?).max(0.0)];
    for k in first..=n {
        weights.push(nbinom_pmf(k as u64, r, p));
    }
    let base = weights.len();
    let mut dense = vec![0.0; n + 1];
    let mut digits = vec![0usize; free];
    let mut counts = vec![0u32; n + 1];
    loop {
        counts.iter_mut().for_each(|c| *c = 0);
        let mut w = 1.0;
        for &d in &digits {
            w *= weights[d];
            if d > 0 {
                counts[first + d - 1] += 1;
            }
        }
        dense[stopping_time(a, &counts)] += w;
        // Odometer increment.
        let mut i = 0;
        loop {
            if i == free {
                return Ok(Pmf::from_dense(dense));
            }
            digits[i] += 1;
            if digits[i] < base {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
    }
}

/// Total variation distance between two pmfs.
pub fn pmf_tv(a: &Pmf, b: &Pmf) -> f64 {
    let lo = a.support_offset.min(b.support_offset);
    let hi = a.support_end().max(b.support_end());
    0.5 * (lo..=hi).map(|k| (a.get(k) - b.get(k)).abs()).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_prob_examples() {
        assert_eq!(step_prob(0, 0.3, 3, 1).unwrap(), 0.0);
        assert_eq!(step_prob(1, 0.3, 3, 1).unwrap(), 0.0);
        assert!((step_prob(1, 0.3, 2, 1).unwrap() - 0.09).abs() < 1e-15);
        assert!((step_prob(2, 0.4, 3, 1).unwrap() - 0.064).abs() < 1e-15);
        assert_eq!(step_prob(1, 1.0, 2, 1).unwrap(), 1.0);
        assert!(matches!(step_prob(2, 1.0, 2, 1), Err(Error::State(_))));
    }

    #[test]
    fn step_prob_matches_definition() {
        for &(t, p, r, u) in &[(5u64, 0.2, 2u32, 1u64), (30, 0.05, 3, 4), (12, 0.5, 2, 2)] {
            let pt = pi_binom(t, p, r).unwrap();
            let want = (pi_binom(t + u, p, r).unwrap() - pt) / (1.0 - pt);
            assert!((step_prob(t, p, r, u).unwrap() - want).abs() < 1e-13);
        }
    }

    #[test]
    fn point_masses() {
        assert_eq!(exact_t_pmf(30, 0.2, 0, 2).unwrap(), Pmf::point(0));
        let pmf = exact_t_pmf(30, 0.0, 4, 2).unwrap();
        assert_eq!(pmf.support_offset, 4);
        assert!((pmf.get(4) - 1.0).abs() < 1e-15);
        let pmf = exact_t_pmf(30, 1.0, 2, 2).unwrap();
        assert!((pmf.get(30) - 1.0).abs() < 1e-15);
        assert_eq!(enumerate_oracle(6, 0.4, 6, 2).unwrap(), Pmf::point(6));
        assert!(exact_t_pmf(401, 0.1, 3, 2).is_err());
        assert!(enumerate_oracle(12, 0.1, 6, 2).is_err());
    }

    #[test]
    fn dp_matches_enumeration() {
        for &(n, p, a, r) in &[
            (8usize, 0.3, 3usize, 2u32),
            (7, 0.5, 2, 3),
            (6, 0.5, 2, 2),
            (9, 0.15, 4, 2),
            (10, 0.6, 5, 3),
            (5, 0.9, 1, 2),
        ] {
            let dp = exact_t_pmf(n, p, a, r).unwrap();
            let oracle = enumerate_oracle(n, p, a, r).unwrap();
            assert!((oracle.total - 1.0).abs() < 1e-12);
            assert!(pmf_tv(&dp, &oracle) < 1e-10, "n={n} p={p} a={a} r={r}");
        }
    }

    #[test]
    fn mass_is_conserved() {
        for &(n, p, a, r) in &[(50usize, 0.05, 3usize, 2u32), (200, 0.02, 10, 2), (400, 0.01, 5, 3), (120, 0.3, 1, 4)] {
            let pmf = exact_t_pmf(n, p, a, r).unwrap();
            assert!((pmf.total - 1.0).abs() < 1e-9, "n={n}: {}", pmf.total);
            assert!(pmf.masses.iter().all(|&m| m >= 0.0));
            assert!(pmf.support_offset >= a && pmf.support_end() <= n);
        }
    }

    /// Law of `A(t+2)` from `A(t) = k`, by two single steps and by one
    /// two-step transition `Bin(n - k, pi(t; 2))`.
    #[test]
    fn two_single_steps_equal_one_double_step() {
        let n = 40;
        let mut row = Vec::new();
        for &(p, r) in &[(0.05, 2u32), (0.2, 3), (0.5, 2)] {
            for t in 0..20u64 {
                if binom_cdf_below(t + 1, p, r) == 0.0 {
                    continue;
                }
                for k in (t as usize + 1)..n {
                    let q1 = step_prob(t, p, r, 1).unwrap();
                    let q2 = step_prob(t + 1, p, r, 1).unwrap();
                    let qq = step_prob(t, p, r, 2).unwrap();
                    let mut composed = vec![0.0; n + 1];
                    binomial_row(n - k, q1, &mut row);
                    let first = row.clone();
                    for (j, &w) in first.iter().enumerate() {
                        binomial_row(n - k - j, q2, &mut row);
                        for (i, &v) in row.iter().enumerate() {
                            composed[k + j + i] += w * v;
                        }
                    }
                    binomial_row(n - k, qq, &mut row);
                    for (i, &v) in row.iter().enumerate() {
                        assert!((composed[k + i] - v).abs() < 1e-10, "p={p} r={r} t={t} k={k}");
                    }
                }
            }
        }
    }

    #[test]
    fn stochastically_monotone() {
        let n = 60;
        let grid_p = [0.02, 0.04, 0.06];
        let grid_a = [1usize, 3, 6];
        for &p in &grid_p {
            let pmfs: Vec<Pmf> = grid_a.iter().map(|&a| exact_t_pmf(n, p, a, 2).unwrap()).collect();
            for w in pmfs.windows(2) {
                for k in 0..=n {
                    assert!(w[1].tail(k) >= w[0].tail(k) - 1e-12);
                }
            }
        }
        for &a in &grid_a {
            let pmfs: Vec<Pmf> = grid_p.iter().map(|&p| exact_t_pmf(n, p, a, 2).unwrap()).collect();
            for w in pmfs.windows(2) {
                for k in 0..=n {
                    assert!(w[1].tail(k) >= w[0].tail(k) - 1e-12);
                }
            }
        }
    }

    #[test]
    fn csv_rows() {
        let pmf = exact_t_pmf(8, 0.3, 2, 2).unwrap();
        let mut buf = Vec::new();
        pmf.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("k,probability"));
        let sum: f64 = lines.map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap()).sum();
        assert!((sum - 1.0).abs() < 1e-9);
    }
}
