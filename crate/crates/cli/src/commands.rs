//! Subcommand implementations.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{anyhow, Context};
use bootperc::dynamics::DynModel;
use bootperc::exact::exact_t_pmf;
use bootperc::markproc::trajectory;
use bootperc::montecarlo::validate::{criteria, run_criterion, Config};
use bootperc::montecarlo::{run_dynamics, run_trials, sweep, Axis, Engine};
use bootperc::theory::{boundary_roots, c_r, theory_report, theta_cc, theta_fold};
use bootperc::{Params, Seed, DEFAULT_BIG_THRESHOLD};

use crate::config::{parse_list, RunConfig};
use crate::output::{Cell, Format, Table};

/// How a command failed; decides the exit code.
#[derive(Debug)]
pub enum Failure {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
    /// Validation ran but at least one criterion failed.
    Validation(usize),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Runtime(_) => 2,
            Failure::Validation(_) => 3,
        }
    }

    pub fn is_broken_pipe(&self) -> bool {
        match self {
            Failure::Usage(e) | Failure::Runtime(e) => e
                .chain()
                .any(|c| c.downcast_ref::<std::io::Error>().is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe)),
            Failure::Validation(_) => false,
        }
    }

    pub fn message(&self) -> Option<String> {
        match self {
            Failure::Usage(e) | Failure::Runtime(e) => Some(format!("{e:#}")),
            Failure::Validation(k) => Some(format!("{k} criteria failed")),
        }
    }
}

/// Parameter problems reported by the library are usage errors; anything
/// else it reports is a runtime error.
fn classify(e: anyhow::Error) -> Failure {
    let usage = e.chain().any(|c| {
        matches!(
            c.downcast_ref::<bootperc::Error>(),
            Some(bootperc::Error::InvalidParams(_) | bootperc::Error::Domain { .. })
        )
    });
    if usage {
        Failure::Usage(e)
    } else {
        Failure::Runtime(e)
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

fn usage<T>(r: anyhow::Result<T>) -> Outcome<T> {
    r.map_err(Failure::Usage)
}

fn runtime<T>(r: bootperc::Result<T>) -> Outcome<T> {
    r.map_err(|e| classify(e.into()))
}

pub fn dispatch(name: &str, mut cfg: RunConfig, out: Option<&Path>) -> Outcome<()> {
    let allowed: &[&str] = match name {
        "theory" => &["n", "p", "a", "r", "c", "theta", "format"],
        "simulate" => &["n", "p", "a", "r", "trials", "seed", "workers", "big_threshold", "engine", "trajectory", "format"],
        "sweep" => &["n", "p", "a", "r", "trials", "seed", "workers", "big_threshold", "engine", "axis", "values", "format"],
        "exact" => &["n", "p", "a", "r", "format"],
        "dyn" => &["model", "n", "p", "a", "r", "trials", "seed", "workers", "big_threshold", "format"],
        "validate" => &["quick", "workers", "seed", "only", "format"],
        other => return Err(Failure::Usage(anyhow!("unknown command '{other}'"))),
    };
    if let Some(bad) = cfg.keys().find(|k| !allowed.contains(k)) {
        return Err(Failure::Usage(anyhow!("--{} is not used by '{name}'", bad.replace('_', "-"))));
    }
    let defaults: [(&str, String); 5] = [
        ("r", "2".into()),
        ("seed", "1".into()),
        ("workers", "0".into()),
        ("format", "csv".into()),
        ("big_threshold", DEFAULT_BIG_THRESHOLD.to_string()),
    ];
    for (k, v) in defaults {
        if allowed.contains(&k) && !cfg.has(k) {
            cfg.set(k, v);
        }
    }
    let format: Format = usage(cfg.get("format").unwrap_or("csv").parse())?;
    let table = match name {
        "theory" => cmd_theory(&cfg),
        "simulate" => cmd_simulate(&mut cfg),
        "sweep" => cmd_sweep(&mut cfg),
        "exact" => cmd_exact(&cfg),
        "dyn" => cmd_dyn(&mut cfg),
        _ => cmd_validate(&cfg),
    };
    let (table, failed) = table?;
    let written = match out {
        Some(path) => File::create(path)
            .with_context(|| format!("creating {}", path.display()))
            .and_then(|f| {
                let mut w = BufWriter::new(f);
                table.write(&cfg, format, &mut w)?;
                Ok(w.flush()?)
            }),
        None => {
            let stdout = std::io::stdout();
            let mut w = stdout.lock();
            table.write(&cfg, format, &mut w).and_then(|_| Ok(w.flush()?))
        }
    };
    written.map_err(Failure::Runtime)?;
    if failed > 0 {
        return Err(Failure::Validation(failed));
    }
    Ok(())
}

fn r_of(cfg: &RunConfig) -> Outcome<u32> {
    let r = usage(cfg.require_int("r"))?;
    u32::try_from(r).map_err(|_| Failure::Usage(anyhow!("--r too large")))
}

fn n_of(cfg: &RunConfig) -> Outcome<usize> {
    Ok(usage(cfg.require_int("n"))? as usize)
}

fn a_opt(cfg: &RunConfig) -> Outcome<Option<usize>> {
    Ok(usage(cfg.int("a"))?.map(|a| a as usize))
}

fn params_of(cfg: &RunConfig) -> Outcome<Params> {
    let params = Params::new(
        n_of(cfg)?,
        usage(cfg.require_f64("p"))?,
        usage(cfg.require_int("a"))? as usize,
        r_of(cfg)?,
    )
    .with_big_threshold(usage(cfg.require_f64("big_threshold"))?);
    runtime(params.validate())
}

fn engine_of(cfg: &mut RunConfig) -> Outcome<Engine> {
    if !cfg.has("engine") {
        cfg.set("engine", "markproc");
    }
    runtime(cfg.get("engine").unwrap().parse())
}

fn trials_of(cfg: &mut RunConfig, default: u64) -> Outcome<u64> {
    if !cfg.has("trials") {
        cfg.set("trials", default.to_string());
    }
    let t = usage(cfg.require_int("trials"))?;
    if t == 0 {
        return Err(Failure::Usage(anyhow!("--trials must be at least 1")));
    }
    Ok(t)
}

fn workers_of(cfg: &RunConfig) -> Outcome<usize> {
    Ok(usage(cfg.require_int("workers"))? as usize)
}

fn seed_of(cfg: &RunConfig) -> Outcome<u64> {
    usage(cfg.require_int("seed"))
}

fn quantity_table() -> Table {
    Table::new("theory", vec!["quantity", "value"])
}

fn push_q(t: &mut Table, name: &str, value: impl Into<Cell>) {
    let cell = value.into();
    if cell != Cell::Missing {
        t.push(vec![name.into(), cell]);
    }
}

fn boundary_rows(t: &mut Table, c: f64, theta: Option<f64>, r: u32) -> Outcome<()> {
    push_q(t, "c", c);
    push_q(t, "c_r", c_r(r));
    push_q(t, "theta_cc", theta_cc(r));
    if c > c_r(r) {
        let fold = runtime(theta_fold(c, r)).map_err(|f| match f {
            Failure::Runtime(e) | Failure::Usage(e) => Failure::Runtime(e.context("fold of the boundary function")),
            other => other,
        })?;
        push_q(t, "theta_c", fold.theta_c);
        push_q(t, "theta_cq", fold.theta_cq);
        push_q(t, "x_fold_low", fold.x_fold_low);
        push_q(t, "x_fold_high", fold.x_fold_high);
    }
    if let Some(theta) = theta {
        let roots = runtime(boundary_roots(c, theta, r))?;
        push_q(t, "theta", theta);
        push_q(t, "root_count", roots.len());
        push_q(t, "x0", roots[0]);
        push_q(t, "x1", *roots.last().unwrap());
    }
    Ok(())
}

fn cmd_theory(cfg: &RunConfig) -> Outcome<(Table, usize)> {
    let r = r_of(cfg)?;
    let mut t = quantity_table();
    push_q(&mut t, "r", r);
    let theta = usage(cfg.f64("theta"))?;
    if let Some(c) = usage(cfg.f64("c"))? {
        if cfg.has("n") || cfg.has("p") || cfg.has("a") {
            return Err(Failure::Usage(anyhow!("--c/--theta cannot be combined with --n/--p/--a")));
        }
        if c < 0.0 {
            return Err(Failure::Usage(anyhow!("--c must be nonnegative")));
        }
        boundary_rows(&mut t, c, theta, r)?;
        return Ok((t, 0));
    }
    if theta.is_some() {
        return Err(Failure::Usage(anyhow!("--theta needs --c")));
    }
    let p = usage(cfg.f64("p"))?;
    let a = a_opt(cfg)?;
    if p.is_none() && a.is_none() {
        return Err(Failure::Usage(anyhow!("theory needs --p or --a (or --c)")));
    }
    let n = n_of(cfg)?;
    let report = runtime(theory_report(n, p, a, r))?;
    push_q(&mut t, "n", n);
    push_q(&mut t, "p", report.p);
    push_q(&mut t, "a", report.a);
    push_q(&mut t, "t_c", report.t_c);
    push_q(&mut t, "a_c", report.a_c);
    push_q(&mut t, "b_c", report.b_c);
    push_q(&mut t, "t_c_star", report.t_c_star);
    push_q(&mut t, "a_c_star", report.a_c_star);
    push_q(&mut t, "a_c_star_wide", report.a_c_star_wide);
    push_q(&mut t, "range_discrepancy", report.range_discrepancy);
    push_q(&mut t, "p_c", report.p_c);
    push_q(&mut t, "p_c_star", report.p_c_star);
    push_q(&mut t, "t_star", report.t_star);
    if let Some(tp) = report.tau_prediction {
        push_q(&mut t, "tau_bottleneck", tp.bottleneck);
        push_q(&mut t, "tau_growth", tp.growth);
        push_q(&mut t, "tau_final_sweep", tp.final_sweep);
        push_q(&mut t, "tau_prediction", tp.total);
    }
    if let Some(p) = p {
        let c = p * n as f64;
        if c <= 20.0 {
            boundary_rows(&mut t, c, a.map(|a| a as f64 / n as f64), r)?;
        }
    }
    Ok((t, 0))
}

fn cmd_simulate(cfg: &mut RunConfig) -> Outcome<(Table, usize)> {
    let params = params_of(cfg)?;
    let trials = trials_of(cfg, 1)?;
    let engine = engine_of(cfg)?;
    let seed = seed_of(cfg)?;
    let workers = workers_of(cfg)?;
    if cfg.has("trajectory") {
        if engine != Engine::Markproc {
            return Err(Failure::Usage(anyhow!("--trajectory needs the markproc engine")));
        }
        let mut t = Table::new("simulate", vec!["trial", "k", "count", "active"]);
        for i in 0..trials {
            let tr = runtime(trajectory(&params, Seed::new(seed, i)))?;
            let active = tr.active_counts();
            for (k, &c) in tr.counts.iter().enumerate() {
                if c > 0 {
                    t.push(vec![i.into(), k.into(), (c as u64).into(), active[k].into()]);
                }
            }
            t.push(vec![i.into(), "never".into(), tr.never_count.into(), Cell::Missing]);
        }
        return Ok((t, 0));
    }
    let outs = runtime(run_trials(&params, trials, seed, engine, workers))?;
    let mut t = Table::new(
        "simulate",
        vec![
            "trial",
            "final_size",
            "percolated_almost",
            "percolated_fully",
            "tau",
            "gen_cross_3tc",
            "gen_cross_inv_p",
            "generation_sizes",
        ],
    );
    for (i, o) in outs.iter().enumerate() {
        let gens: Vec<String> = o.generation_sizes.iter().map(|g| g.to_string()).collect();
        t.push(vec![
            i.into(),
            o.final_size.into(),
            o.percolated_almost.into(),
            o.percolated_fully.into(),
            o.tau.into(),
            o.gen_cross_3tc.into(),
            o.gen_cross_inv_p.into(),
            gens.join(";").into(),
        ]);
    }
    Ok((t, 0))
}

fn cmd_sweep(cfg: &mut RunConfig) -> Outcome<(Table, usize)> {
    let axis: Axis = runtime(cfg.get("axis").ok_or_else(|| Failure::Usage(anyhow!("missing --axis")))?.parse())?;
    let values = usage(parse_list(cfg.get("values").ok_or_else(|| Failure::Usage(anyhow!("missing --values")))?))?;
    // The swept parameter may be omitted; it is replaced per point.
    let placeholder = match axis {
        Axis::A if !cfg.has("a") => Some(("a", "0")),
        Axis::P if !cfg.has("p") => Some(("p", "0")),
        _ => None,
    };
    let mut base_cfg = cfg.clone();
    if let Some((k, v)) = placeholder {
        base_cfg.set(k, v);
    }
    let base = params_of(&base_cfg)?;
    let trials = trials_of(cfg, 100)?;
    let engine = engine_of(cfg)?;
    let rows = runtime(sweep(&base, axis, &values, trials, seed_of(cfg)?, engine, workers_of(cfg)?))?;
    let mut t = Table::new(
        "sweep",
        vec![
            "value", "n", "p", "a", "r", "trials", "mean_final", "var_final", "perc_prob", "perc_lo", "perc_hi",
            "full_prob", "full_lo", "full_hi", "mean_tau", "var_tau",
        ],
    );
    for row in rows {
        let s = &row.stats;
        let (pl, ph) = s.perc_interval();
        let (fl, fh) = s.full_interval();
        t.push(vec![
            row.value.into(),
            row.params.n.into(),
            row.params.p.into(),
            row.params.a.into(),
            row.params.r.into(),
            s.trials.into(),
            s.mean_final().into(),
            s.var_final().into(),
            s.perc_prob().into(),
            pl.into(),
            ph.into(),
            s.full_prob().into(),
            fl.into(),
            fh.into(),
            s.mean_tau().into(),
            s.var_tau().into(),
        ]);
    }
    Ok((t, 0))
}

fn cmd_exact(cfg: &RunConfig) -> Outcome<(Table, usize)> {
    let n = n_of(cfg)?;
    let p = usage(cfg.require_f64("p"))?;
    let a = usage(cfg.require_int("a"))? as usize;
    let pmf = runtime(exact_t_pmf(n, p, a, r_of(cfg)?))?;
    let mut t = Table::new("exact", vec!["k", "probability"]);
    t.meta("total", pmf.total);
    t.meta("mean", pmf.mean());
    for (k, m) in pmf.iter() {
        t.push(vec![k.into(), m.into()]);
    }
    Ok((t, 0))
}

fn cmd_dyn(cfg: &mut RunConfig) -> Outcome<(Table, usize)> {
    let model = match cfg.get("model") {
        Some("activation") => DynModel::Activation,
        Some("infection") => DynModel::Infection,
        Some("edges") => DynModel::Edges,
        Some(other) => return Err(Failure::Usage(anyhow!("unknown model '{other}' (activation|infection|edges)"))),
        None => return Err(Failure::Usage(anyhow!("missing --model"))),
    };
    let n = n_of(cfg)?;
    let r = r_of(cfg)?;
    let big = usage(cfg.require_f64("big_threshold"))?;
    let runs = trials_of(cfg, 1)?;
    let seed = seed_of(cfg)?;
    let workers = workers_of(cfg)?;
    let (p, a) = match model {
        DynModel::Edges => {
            if cfg.has("p") {
                return Err(Failure::Usage(anyhow!("--p is not used by the edges model")));
            }
            (0.0, usage(cfg.require_int("a"))? as usize)
        }
        _ => {
            if cfg.has("a") {
                return Err(Failure::Usage(anyhow!("--a is not used by the {model} model")));
            }
            (usage(cfg.require_f64("p"))?, 0)
        }
    };
    let outs = runtime(run_dynamics(model, n, p, a, r, big, runs, seed, workers))?;
    let mut t = Table::new("dyn", vec!["run", "model", "threshold_value", "saturated"]);
    let mean = outs.iter().map(|o| o.threshold_value as f64).sum::<f64>() / outs.len() as f64;
    t.meta("mean", mean);
    for (i, o) in outs.iter().enumerate() {
        t.push(vec![i.into(), o.model.to_string().into(), o.threshold_value.into(), o.saturated.into()]);
    }
    Ok((t, 0))
}

fn cmd_validate(cfg: &RunConfig) -> Outcome<(Table, usize)> {
    let config = Config {
        quick: cfg.has("quick"),
        workers: workers_of(cfg)?,
        seed: seed_of(cfg)?,
    };
    let only: Option<Vec<u32>> = match cfg.get("only") {
        Some(list) => Some(
            usage(parse_list(list))?
                .into_iter()
                .map(|x| x as u32)
                .collect(),
        ),
        None => None,
    };
    let ids: Vec<u32> = criteria()
        .iter()
        .map(|c| c.0)
        .filter(|id| only.as_ref().is_none_or(|o| o.contains(id)))
        .collect();
    if ids.is_empty() {
        return Err(Failure::Usage(anyhow!("--only selects no criteria")));
    }
    let mut t = Table::new("validate", vec!["id", "name", "passed", "seconds", "detail"]);
    let mut failed = 0;
    for id in ids {
        let res = run_criterion(id, &config).ok_or_else(|| Failure::Usage(anyhow!("unknown criterion {id}")))?;
        eprintln!(
            "{} criterion {:>2} {} ({:.1}s): {}",
            if res.passed { "PASS" } else { "FAIL" },
            res.id,
            res.name,
            res.seconds,
            res.detail
        );
        failed += !res.passed as usize;
        t.push(vec![res.id.into(), res.name.into(), res.passed.into(), res.seconds.into(), res.detail.into()]);
    }
    t.meta("failed", failed);
    Ok((t, failed))
}
