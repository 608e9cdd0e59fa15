//! The time-rescaled mark process.
//!
//! Each inactive vertex gets a mark whenever the vertex used at that time
//! step is its neighbour; marks are i.i.d. Bernoulli(p), so the activation
//! time `Y_i` (time of the r-th mark) is negative binomial and the active
//! count is `A(t) = a + #{i : Y_i <= t}`. The process stops at
//! `T = min{t : A(t) = t}` and the final active set has size `T`.
//!
//! The fast path keeps only a histogram of activation times (a counting
//! sort), so a trial is one linear pass over `n` samples plus a prefix scan.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{ActivationTime, Params, TrialOutcome};
use crate::seed::{Seed, TrialRng};

/// Largest `n` accepted by [`coupled_realization`].
pub const COUPLED_MAX_N: usize = 100_000;

/// Samples Geometric(p) trial counts (support 1, 2, ...) as
/// `ceil(E / -ln(1-p))` with `E ~ Exp(1)`, which has exactly the geometric law.
#[derive(Debug, Clone, Copy)]
pub struct GeometricSampler {
    inv_rate: f64,
    certain: bool,
    impossible: bool,
}

impl GeometricSampler {
    pub fn new(p: f64) -> Self {
        GeometricSampler {
            inv_rate: if p > 0.0 && p < 1.0 { -1.0 / (-p).ln_1p() } else { 0.0 },
            certain: p >= 1.0,
            impossible: p <= 0.0,
        }
    }

    /// Number of trials up to and including the first success, or `u64::MAX`
    /// when `p = 0`.
    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        if self.certain {
            return 1;
        }
        if self.impossible {
            return u64::MAX;
        }
        let e: f64 = Exp1.sample(rng);
        let g = (e * self.inv_rate).ceil();
        if g >= u64::MAX as f64 {
            u64::MAX
        } else {
            (g as u64).max(1)
        }
    }
}

/// Time of the r-th success in Bernoulli(p) trials, as a sum of `r`
/// geometric gaps; gives up as soon as the partial sum passes `cap`.
pub fn sample_activation_time<R: Rng + ?Sized>(p: f64, r: u32, cap: usize, rng: &mut R) -> ActivationTime {
    let sampler = GeometricSampler::new(p);
    sample_with(&sampler, r, cap as u64, rng)
}

#[inline]
fn sample_with<R: Rng + ?Sized>(sampler: &GeometricSampler, r: u32, cap: u64, rng: &mut R) -> ActivationTime {
    let mut total: u64 = 0;
    for _ in 0..r {
        total = total.saturating_add(sampler.sample(rng));
        if total > cap {
            return ActivationTime::Never;
        }
    }
    ActivationTime::At(total as usize)
}

/// Histogram of activation times of the `n - a` initially inactive vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub n: usize,
    pub a: usize,
    /// `counts[k] = #{i : Y_i = k}` for `k` in `0..=n` (zero below `r`).
    pub counts: Vec<u32>,
    pub never_count: usize,
}

impl Trajectory {
    /// `A(t)` for `t = 0..=n`.
    pub fn active_counts(&self) -> Vec<usize> {
        let mut acc = self.a;
        self.counts
            .iter()
            .map(|&c| {
                acc += c as usize;
                acc
            })
            .collect()
    }

    /// `S(t) = A(t) - a`.
    pub fn newly_active(&self, t: usize) -> usize {
        self.counts[..=t.min(self.n)].iter().map(|&c| c as usize).sum()
    }

    /// Stopping time `T = min{t : A(t) <= t}`.
    pub fn stopping_time(&self) -> usize {
        stopping_time(self.a, &self.counts)
    }
}

fn sample_histogram(params: &Params, rng: &mut TrialRng) -> (Vec<u32>, usize) {
    let mut counts = Vec::new();
    let never = fill_histogram(&mut counts, params, rng);
    (counts, never)
}

/// Resets `counts` to `n + 1` zeros and fills it; returns the number of
/// vertices that never activate.
fn fill_histogram(counts: &mut Vec<u32>, params: &Params, rng: &mut TrialRng) -> usize {
    let n = params.n;
    counts.clear();
    counts.resize(n + 1, 0);
    let mut never = 0usize;
    let sampler = GeometricSampler::new(params.p);
    for _ in 0..(n - params.a) {
        match sample_with(&sampler, params.r, n as u64, rng) {
            ActivationTime::At(k) => counts[k] += 1,
            ActivationTime::Never => never += 1,
        }
    }
    never
}

thread_local! {
    // Reused across trials on one thread so large histograms are not
    // reallocated (and page-faulted in) every time.
    static SCRATCH: std::cell::RefCell<Vec<u32>> = const { std::cell::RefCell::new(Vec::new()) };
}

pub(crate) fn stopping_time(a: usize, counts: &[u32]) -> usize {
    let mut active = a;
    for (t, &c) in counts.iter().enumerate() {
        active += c as usize;
        if active <= t {
            return t;
        }
    }
    // A(n) <= n always holds, so the scan ends at t = n at the latest.
    counts.len() - 1
}

/// Generation sizes from the activation histogram: `T_0 = 0`,
/// `T_{j+1} = A(T_j)`, `|G_j| = T_{j+1} - T_j`.
fn generations_from_counts(a: usize, counts: &[u32]) -> Vec<usize> {
    let t_final = stopping_time(a, counts);
    let mut sizes = Vec::new();
    let mut boundary = 0usize; // T_j
    let mut active = a; // A(boundary)
    let mut scanned = 0usize; // counts[..=boundary] already folded into `active`
    active += counts[0] as usize;
    loop {
        let next = active.min(t_final);
        sizes.push(next - boundary);
        if next == boundary {
            break;
        }
        for &c in &counts[scanned + 1..=next] {
            active += c as usize;
        }
        scanned = next;
        boundary = next;
    }
    sizes
}

/// Full activation-time histogram for one trial.
pub fn trajectory(params: &Params, seed: Seed) -> Result<Trajectory> {
    let params = params.validate()?;
    let mut rng = seed.rng();
    let (counts, never_count) = sample_histogram(&params, &mut rng);
    Ok(Trajectory {
        n: params.n,
        a: params.a,
        counts,
        never_count,
    })
}

/// One trial of the static process.
pub fn run_trial(params: &Params, seed: Seed) -> Result<TrialOutcome> {
    let params = params.validate()?;
    let mut rng = seed.rng();
    let sizes = SCRATCH.with_borrow_mut(|counts| {
        fill_histogram(counts, &params, &mut rng);
        let sizes = generations_from_counts(params.a, counts);
        if counts.capacity() > 4 * (params.n + 1) {
            *counts = Vec::new();
        }
        sizes
    });
    Ok(TrialOutcome::from_generations(&params, sizes))
}

/// Undirected edge list of a realised graph, each edge `(min, max)`.
pub type EdgeList = Vec<(u32, u32)>;

/// Builds a G(n,p) realisation together with the process on it.
///
/// Vertices `0..a` start active. At step `t = 1..=n` the used vertex `u_t` is
/// the oldest unused active vertex (newly activated vertices join the queue
/// in label order) or, if none is left, the smallest unused label. Every
/// unused vertex `i != u_t` receives the edge `u_t i` with probability `p`;
/// the indicators are drawn by geometric skipping over the unused list.
/// Each unordered pair is decided exactly once, so the result is G(n,p).
pub fn coupled_realization(params: &Params, seed: Seed) -> Result<(EdgeList, TrialOutcome)> {
    let params = params.validate()?;
    let n = params.n;
    if n > COUPLED_MAX_N {
        return Err(Error::TooLarge(format!(
            "coupled realization needs n <= {COUPLED_MAX_N} (got {n})"
        )));
    }
    let r = params.r;
    let mut rng = seed.rng();
    let skip = GeometricSampler::new(params.p);

    let mut marks = vec![0u32; n];
    let mut active = vec![false; n];
    let mut used = vec![false; n];
    // Unused vertices in a swap-remove list; `pos[v]` locates v in it.
    let mut unused: Vec<u32> = (0..n as u32).collect();
    let mut pos: Vec<usize> = (0..n).collect();
    let mut queue = std::collections::VecDeque::with_capacity(n);
    let mut smallest_unused = 0usize;
    let mut activation = vec![ActivationTime::Never; n];
    for v in 0..params.a {
        active[v] = true;
        queue.push_back(v as u32);
    }

    let mut edges: EdgeList = Vec::new();
    let mut fresh: Vec<u32> = Vec::new();
    for t in 1..=n {
        let u = match queue.pop_front() {
            Some(u) => u as usize,
            None => {
                while used[smallest_unused] {
                    smallest_unused += 1;
                }
                smallest_unused
            }
        };
        used[u] = true;
        let slot = pos[u];
        let last = *unused.last().unwrap();
        unused.swap_remove(slot);
        if (last as usize) != u {
            pos[last as usize] = slot;
        }

        // Indicators I_i(t) for every unused i, by geometric skipping.
        let len = unused.len() as u64;
        let mut idx = skip.sample(&mut rng);
        while idx <= len {
            let i = unused[(idx - 1) as usize] as usize;
            edges.push((u.min(i) as u32, u.max(i) as u32));
            marks[i] += 1;
            if !active[i] && marks[i] >= r {
                active[i] = true;
                activation[i] = ActivationTime::At(t);
                fresh.push(i as u32);
            }
            idx = idx.saturating_add(skip.sample(&mut rng));
        }
        fresh.sort_unstable();
        queue.extend(fresh.drain(..));
    }

    let mut counts = vec![0u32; n + 1];
    for v in params.a..n {
        if let ActivationTime::At(k) = activation[v] {
            counts[k] += 1;
        }
    }
    edges.sort_unstable();
    let outcome = TrialOutcome::from_generations(&params, generations_from_counts(params.a, &counts));
    Ok((edges, outcome))
}
