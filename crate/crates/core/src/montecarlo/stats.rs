use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::exact::Pmf;
use crate::params::{Params, TrialOutcome};

const Z_95: f64 = 1.959_963_984_540_054;

/// Wilson score interval at 95% for `successes` out of `trials`.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let phat = successes as f64 / n;
    let z2 = Z_95 * Z_95;
    let centre = (phat + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = Z_95 / (1.0 + z2 / n) * (phat * (1.0 - phat) / n + z2 / (4.0 * n * n)).sqrt();
    ((centre - half).max(0.0).min(phat), (centre + half).min(1.0).max(phat))
}

/// Exact integer moment accumulator: merges are associative and
/// commutative, so any grouping of trials gives identical results.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
struct Moments {
    sum: u128,
    sum_sq: u128,
}

impl Moments {
    fn push(&mut self, x: u64) {
        self.sum += x as u128;
        self.sum_sq += (x as u128) * (x as u128);
    }

    fn merge(&mut self, other: &Moments) {
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    fn mean(&self, count: u64) -> f64 {
        if count == 0 {
            return f64::NAN;
        }
        self.sum as f64 / count as f64
    }

    /// Unbiased sample variance.
    fn variance(&self, count: u64) -> f64 {
        if count < 2 {
            return 0.0;
        }
        let c = count as u128;
        match c.checked_mul(self.sum_sq).and_then(|x| x.checked_sub(self.sum * self.sum)) {
            Some(num) => num as f64 / (count as f64 * (count - 1) as f64),
            None => {
                let mean = self.mean(count);
                (self.sum_sq as f64 - count as f64 * mean * mean) / (count - 1) as f64
            }
        }
    }
}

fn bump(map: &mut BTreeMap<usize, u64>, key: usize, by: u64) {
    *map.entry(key).or_insert(0) += by;
}

fn merge_maps(into: &mut BTreeMap<usize, u64>, from: &BTreeMap<usize, u64>) {
    for (&k, &v) in from {
        bump(into, k, v);
    }
}

/// Aggregate of a batch of trials of one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleStats {
    pub n: usize,
    pub trials: u64,
    final_moments: Moments,
    tau_moments: Moments,
    pub percolated: u64,
    pub fully_percolated: u64,
    /// Final size histogram.
    pub final_hist: BTreeMap<usize, u64>,
    /// Histogram of `tau`.
    pub tau_hist: BTreeMap<usize, u64>,
    /// Histogram of the generation at which `T_j` first reaches `3 t_c`.
    pub cross_3tc_hist: BTreeMap<usize, u64>,
    /// Histogram of `tau(1/p) - tau(3 t_c)` over trials reaching both.
    pub cross_gap_hist: BTreeMap<usize, u64>,
}

/// Final-size histogram split into two clusters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSplit {
    pub low_anchor: f64,
    pub high_anchor: f64,
    /// Sizes `<= split` form the low cluster.
    pub split: f64,
    pub low_count: u64,
    pub high_count: u64,
    pub low_mean: f64,
    pub high_mean: f64,
}

impl SampleStats {
    pub fn empty(params: &Params) -> Self {
        SampleStats {
            n: params.n,
            trials: 0,
            final_moments: Moments::default(),
            tau_moments: Moments::default(),
            percolated: 0,
            fully_percolated: 0,
            final_hist: BTreeMap::new(),
            tau_hist: BTreeMap::new(),
            cross_3tc_hist: BTreeMap::new(),
            cross_gap_hist: BTreeMap::new(),
        }
    }

    pub fn from_outcome(params: &Params, outcome: &TrialOutcome) -> Self {
        let mut s = SampleStats::empty(params);
        s.push(outcome);
        s
    }

    pub fn push(&mut self, o: &TrialOutcome) {
        self.trials += 1;
        self.final_moments.push(o.final_size as u64);
        self.tau_moments.push(o.tau as u64);
        self.percolated += o.percolated_almost as u64;
        self.fully_percolated += o.percolated_fully as u64;
        bump(&mut self.final_hist, o.final_size, 1);
        bump(&mut self.tau_hist, o.tau, 1);
        if let Some(j) = o.gen_cross_3tc {
            bump(&mut self.cross_3tc_hist, j, 1);
            if let Some(k) = o.gen_cross_inv_p {
                bump(&mut self.cross_gap_hist, k.saturating_sub(j), 1);
            }
        }
    }

    pub fn merge(&mut self, other: &SampleStats) {
        self.trials += other.trials;
        self.final_moments.merge(&other.final_moments);
        self.tau_moments.merge(&other.tau_moments);
        self.percolated += other.percolated;
        self.fully_percolated += other.fully_percolated;
        merge_maps(&mut self.final_hist, &other.final_hist);
        merge_maps(&mut self.tau_hist, &other.tau_hist);
        merge_maps(&mut self.cross_3tc_hist, &other.cross_3tc_hist);
        merge_maps(&mut self.cross_gap_hist, &other.cross_gap_hist);
    }

    pub fn mean_final(&self) -> f64 {
        self.final_moments.mean(self.trials)
    }

    pub fn var_final(&self) -> f64 {
        self.final_moments.variance(self.trials)
    }

    pub fn mean_tau(&self) -> f64 {
        self.tau_moments.mean(self.trials)
    }

    pub fn var_tau(&self) -> f64 {
        self.tau_moments.variance(self.trials)
    }

    /// Fraction of trials that ended big.
    pub fn perc_prob(&self) -> f64 {
        self.percolated as f64 / self.trials as f64
    }

    pub fn perc_interval(&self) -> (f64, f64) {
        wilson_interval(self.percolated, self.trials)
    }

    pub fn full_prob(&self) -> f64 {
        self.fully_percolated as f64 / self.trials as f64
    }

    pub fn full_interval(&self) -> (f64, f64) {
        wilson_interval(self.fully_percolated, self.trials)
    }

    /// Lower median of the final size.
    pub fn median_final(&self) -> usize {
        let target = self.trials.div_ceil(2);
        let mut seen = 0;
        for (&k, &c) in &self.final_hist {
            seen += c;
            if seen >= target {
                return k;
            }
        }
        0
    }

    /// Fraction of trials whose final size lies in `[lo, hi]`.
    pub fn final_fraction_in(&self, lo: f64, hi: f64) -> f64 {
        let count: u64 = self
            .final_hist
            .iter()
            .filter(|(&k, _)| k as f64 >= lo && k as f64 <= hi)
            .map(|(_, &c)| c)
            .sum();
        count as f64 / self.trials as f64
    }

    /// Empirical law of `n - A*`.
    pub fn deficiency_pmf(&self) -> Pmf {
        let max = self.final_hist.keys().next().map_or(0, |&k| self.n - k);
        let mut dense = vec![0.0; max + 1];
        for (&k, &c) in &self.final_hist {
            dense[self.n - k] += c as f64 / self.trials as f64;
        }
        Pmf::from_dense(dense)
    }

    /// Splits the final sizes at the midpoint of the widest empty gap
    /// between the two predicted cluster centres.
    pub fn cluster_split(&self, low_anchor: f64, high_anchor: f64) -> ClusterSplit {
        let inside: Vec<usize> = self
            .final_hist
            .keys()
            .copied()
            .filter(|&k| k as f64 > low_anchor && (k as f64) < high_anchor)
            .collect();
        let mut edges = vec![low_anchor];
        edges.extend(inside.iter().map(|&k| k as f64));
        edges.push(high_anchor);
        let (mut best, mut split) = (-1.0, 0.5 * (low_anchor + high_anchor));
        for w in edges.windows(2) {
            if w[1] - w[0] > best {
                best = w[1] - w[0];
                split = 0.5 * (w[0] + w[1]);
            }
        }
        let (mut lc, mut hc, mut ls, mut hs) = (0u64, 0u64, 0.0, 0.0);
        for (&k, &c) in &self.final_hist {
            if (k as f64) <= split {
                lc += c;
                ls += k as f64 * c as f64;
            } else {
                hc += c;
                hs += k as f64 * c as f64;
            }
        }
        ClusterSplit {
            low_anchor,
            high_anchor,
            split,
            low_count: lc,
            high_count: hc,
            low_mean: if lc > 0 { ls / lc as f64 } else { f64::NAN },
            high_mean: if hc > 0 { hs / hc as f64 } else { f64::NAN },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_contains_estimate() {
        for &(s, n) in &[(0u64, 10u64), (10, 10), (3, 10), (500, 1000), (1, 1_000_000)] {
            let (lo, hi) = wilson_interval(s, n);
            let phat = s as f64 / n as f64;
            assert!(lo <= phat && phat <= hi);
            assert!((0.0..=1.0).contains(&lo) && (0.0..=1.0).contains(&hi));
        }
        let (lo, hi) = wilson_interval(50, 100);
        assert!((lo - 0.4038).abs() < 1e-3 && (hi - 0.5962).abs() < 1e-3);
    }

    #[test]
    fn moments_are_exact() {
        let mut m = Moments::default();
        for x in [1_000_000_000u64, 1_000_000_001, 1_000_000_002] {
            m.push(x);
        }
        assert_eq!(m.mean(3), 1_000_000_001.0);
        assert_eq!(m.variance(3), 1.0);
    }

    fn outcome(final_size: usize, n: usize) -> TrialOutcome {
        let params = Params::new(n, 0.0, final_size, 2);
        TrialOutcome::from_generations(&params, vec![final_size])
    }

    #[test]
    fn histograms_and_clusters() {
        let params = Params::new(100, 0.0, 0, 2);
        let mut s = SampleStats::empty(&params);
        for k in [10, 11, 12, 90, 91, 100, 100] {
            s.push(&outcome(k, 100));
        }
        assert_eq!(s.trials, 7);
        assert_eq!(s.median_final(), 90);
        assert_eq!(s.fully_percolated, 2);
        let d = s.deficiency_pmf();
        assert!((d.get(0) - 2.0 / 7.0).abs() < 1e-15);
        assert!((d.total - 1.0).abs() < 1e-12);
        let c = s.cluster_split(10.0, 95.0);
        assert_eq!((c.low_count, c.high_count), (3, 4));
        assert!(c.split > 12.0 && c.split < 90.0);
        assert!((s.final_fraction_in(10.0, 12.0) - 3.0 / 7.0).abs() < 1e-15);
    }
}
