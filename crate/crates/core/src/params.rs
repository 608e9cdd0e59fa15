//! Instance parameters and per-trial outcomes shared by every engine.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::theory;

/// Default fraction of `n` above which an active set counts as "big".
pub const DEFAULT_BIG_THRESHOLD: f64 = 0.5;

/// One bootstrap percolation instance on G(n,p): `a` initially active
/// vertices, activation after `r` active neighbours.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub n: usize,
    pub p: f64,
    pub a: usize,
    pub r: u32,
    pub big_threshold: f64,
}

impl Params {
    pub fn new(n: usize, p: f64, a: usize, r: u32) -> Self {
        Params {
            n,
            p,
            a,
            r,
            big_threshold: DEFAULT_BIG_THRESHOLD,
        }
    }

    pub fn with_big_threshold(mut self, big_threshold: f64) -> Self {
        self.big_threshold = big_threshold;
        self
    }

    /// Checks every invariant and reports all violations at once.
    pub fn validate(self) -> Result<Self> {
        let mut problems = Vec::new();
        if self.n == 0 {
            problems.push("n must be at least 1".to_string());
        }
        if self.a > self.n {
            problems.push(format!("a exceeds n ({} > {})", self.a, self.n));
        }
        if !(0.0..=1.0).contains(&self.p) {
            problems.push(format!("p outside [0,1] ({})", self.p));
        }
        if self.r < 2 {
            problems.push(format!("r must be at least 2 ({})", self.r));
        }
        if !(self.big_threshold > 0.0 && self.big_threshold <= 1.0) {
            problems.push(format!(
                "big_threshold outside (0,1] ({})",
                self.big_threshold
            ));
        }
        if problems.is_empty() {
            Ok(self)
        } else {
            Err(Error::InvalidParams(problems.join("; ")))
        }
    }

    /// Smallest active count that counts as "almost percolated".
    pub(crate) fn big_count(&self) -> f64 {
        self.big_threshold * self.n as f64
    }
}

/// Time at which a vertex collects its r-th mark. Times beyond `n` are
/// folded into `Never` since the process stops by time `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ActivationTime {
    At(usize),
    Never,
}

impl ActivationTime {
    pub fn capped(time: u64, cap: usize) -> Self {
        if time > cap as u64 {
            ActivationTime::Never
        } else {
            ActivationTime::At(time as usize)
        }
    }

    pub fn finite(self) -> Option<usize> {
        match self {
            ActivationTime::At(t) => Some(t),
            ActivationTime::Never => None,
        }
    }
}

/// Result of one run of the static process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub final_size: usize,
    pub percolated_almost: bool,
    pub percolated_fully: bool,
    pub tau: usize,
    /// `|G_0|, |G_1|, ...`; the first entry is always `a`.
    pub generation_sizes: Vec<usize>,
    pub gen_cross_3tc: Option<usize>,
    pub gen_cross_inv_p: Option<usize>,
}

impl TrialOutcome {
    /// Builds an outcome from generation sizes. Trailing empty generations
    /// are dropped (except `G_0`, which is kept even when `a = 0`).
    pub fn from_generations(params: &Params, mut generation_sizes: Vec<usize>) -> Self {
        if generation_sizes.is_empty() {
            generation_sizes.push(0);
        }
        while generation_sizes.len() > 1 && *generation_sizes.last().unwrap() == 0 {
            generation_sizes.pop();
        }
        let final_size: usize = generation_sizes.iter().sum();
        let tau = generation_sizes
            .iter()
            .rposition(|&g| g > 0)
            .unwrap_or(0);

        // T_0 = 0, T_{j+1} = T_j + |G_j|; tau(m) = first j with T_j >= m.
        let crossing = |m: f64| -> Option<usize> {
            let mut boundary = 0usize;
            if boundary as f64 >= m {
                return Some(0);
            }
            for (j, &g) in generation_sizes.iter().enumerate() {
                boundary += g;
                if boundary as f64 >= m {
                    return Some(j + 1);
                }
            }
            None
        };
        let (gen_cross_3tc, gen_cross_inv_p) = if params.p > 0.0 && params.p < 1.0 {
            let t_c = theory::critical_time(params.n as f64, params.p, params.r);
            (crossing(3.0 * t_c), crossing(1.0 / params.p))
        } else {
            (None, None)
        };

        TrialOutcome {
            final_size,
            percolated_almost: final_size as f64 >= params.big_count(),
            percolated_fully: final_size == params.n,
            tau,
            generation_sizes,
            gen_cross_3tc,
            gen_cross_inv_p,
        }
    }
}
