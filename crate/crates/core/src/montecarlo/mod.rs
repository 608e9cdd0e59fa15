//! Trial batches, aggregate statistics and distribution utilities.

mod stats;
pub mod validate;

pub use stats::{wilson_interval, ClusterSplit, SampleStats};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{run_model, DynModel, DynOutcome};
use crate::error::{Error, Result};
use crate::exact::Pmf;
use crate::graph::{bootstrap, gen_gnp};
use crate::markproc::run_trial;
use crate::params::{Params, TrialOutcome};
use crate::seed::{mix64, Seed};

pub use crate::theory::poisson_pmf;

/// Which construction produces each trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    /// Negative-binomial activation times, no graph.
    #[default]
    Markproc,
    /// Sample G(n,p) and run bootstrap percolation from vertices `0..a`.
    Graph,
}

impl std::str::FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "markproc" => Ok(Engine::Markproc),
            "graph" => Ok(Engine::Graph),
            other => Err(Error::InvalidParams(format!("unknown engine '{other}' (markproc|graph)"))),
        }
    }
}

impl std::fmt::Display for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Engine::Markproc => "markproc",
            Engine::Graph => "graph",
        })
    }
}

/// One trial with the given engine.
pub fn run_one(params: &Params, seed: Seed, engine: Engine) -> Result<TrialOutcome> {
    match engine {
        Engine::Markproc => run_trial(params, seed),
        Engine::Graph => {
            let params = params.validate()?;
            let graph = gen_gnp(params.n, params.p, seed)?;
            let initial: Vec<u32> = (0..params.a as u32).collect();
            let res = bootstrap(&graph, &initial, params.r)?;
            Ok(TrialOutcome::from_generations(&params, res.generation_sizes))
        }
    }
}

/// Runs `f` on a pool of `workers` threads (0 means one per core).
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::State(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Outcomes of trials `0..trials`, trial `i` seeded by `(master_seed, i)`,
/// returned in trial order.
pub fn run_trials(
    params: &Params,
    trials: u64,
    master_seed: u64,
    engine: Engine,
    workers: usize,
) -> Result<Vec<TrialOutcome>> {
    let params = params.validate()?;
    with_workers(workers, || {
        (0..trials)
            .into_par_iter()
            .map(|i| run_one(&params, Seed::new(master_seed, i), engine))
            .collect::<Result<Vec<_>>>()
    })?
}

/// Aggregated statistics of `trials` independent trials. The result does
/// not depend on `workers` or on scheduling.
pub fn run_batch(params: &Params, trials: u64, master_seed: u64, engine: Engine, workers: usize) -> Result<SampleStats> {
    let params = params.validate()?;
    if trials == 0 {
        return Err(Error::InvalidParams("trials must be at least 1".into()));
    }
    with_workers(workers, || {
        (0..trials)
            .into_par_iter()
            .map(|i| run_one(&params, Seed::new(master_seed, i), engine).map(|o| SampleStats::from_outcome(&params, &o)))
            .try_reduce(|| SampleStats::empty(&params), |mut a, b| {
                a.merge(&b);
                Ok(a)
            })
    })?
}

/// `runs` measurements of a dynamical model, run `i` seeded by
/// `(master_seed, i)`, in run order.
#[allow(clippy::too_many_arguments)]
pub fn run_dynamics(
    model: DynModel,
    n: usize,
    p: f64,
    a: usize,
    r: u32,
    big_threshold: f64,
    runs: u64,
    master_seed: u64,
    workers: usize,
) -> Result<Vec<DynOutcome>> {
    with_workers(workers, || {
        (0..runs)
            .into_par_iter()
            .map(|i| run_model(model, n, p, a, r, big_threshold, Seed::new(master_seed, i)))
            .collect::<Result<Vec<_>>>()
    })?
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    A,
    P,
}

impl std::str::FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "a" => Ok(Axis::A),
            "p" => Ok(Axis::P),
            other => Err(Error::InvalidParams(format!("unknown axis '{other}' (a|p)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub params: Params,
    pub stats: SampleStats,
}

/// Master seed for point `index` of a sweep.
pub fn point_seed(master_seed: u64, index: u64) -> u64 {
    mix64(master_seed ^ mix64(index.wrapping_add(1)))
}

/// One batch per value of `axis`; values must be sorted ascending.
pub fn sweep(
    base: &Params,
    axis: Axis,
    values: &[f64],
    trials: u64,
    master_seed: u64,
    engine: Engine,
    workers: usize,
) -> Result<Vec<SweepRow>> {
    if values.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidParams("sweep values must be sorted ascending".into()));
    }
    values
        .iter()
        .enumerate()
        .map(|(i, &value)| {
            let mut params = *base;
            match axis {
                Axis::A => {
                    if value < 0.0 || value.fract() != 0.0 {
                        return Err(Error::InvalidParams(format!("a must be a nonnegative integer (got {value})")));
                    }
                    params.a = value as usize;
                }
                Axis::P => params.p = value,
            }
            let stats = run_batch(&params, trials, point_seed(master_seed, i as u64), engine, workers)?;
            Ok(SweepRow { value, params, stats })
        })
        .collect()
}

/// Total variation distance between two pmfs indexed from 0.
pub fn tv_distance(p: &[f64], q: &[f64]) -> f64 {
    let len = p.len().max(q.len());
    0.5 * (0..len)
        .map(|k| (p.get(k).copied().unwrap_or(0.0) - q.get(k).copied().unwrap_or(0.0)).abs())
        .sum::<f64>()
}

/// Total variation distance between two [`Pmf`]s.
pub fn pmf_tv(p: &Pmf, q: &Pmf) -> f64 {
    crate::exact::pmf_tv(p, q)
}

/// Standard normal distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}
