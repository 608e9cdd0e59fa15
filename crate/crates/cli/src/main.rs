//! `bootperc` command-line tool.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;

#[derive(Parser, Debug)]
#[command(name = "bootperc", version, about = "Bootstrap percolation on G(n,p): theory, simulation, exact laws")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Threshold and limit quantities for (n, p, a, r) or (c, theta, r).
    Theory(Flags),
    /// Independent trials of one instance (optionally the activation histogram).
    Simulate(Flags),
    /// Batch statistics along an a- or p-axis.
    Sweep(Flags),
    /// Exact law of the final size for small n.
    Exact(Flags),
    /// Dynamical thresholds: external activations, infections or edge additions.
    Dyn(Flags),
    /// Run the acceptance criteria and report pass/fail per criterion.
    Validate(Flags),
}

/// Flags shared by every subcommand; each subcommand accepts a subset.
#[derive(Args, Debug, Default)]
struct Flags {
    /// Vertex count (scientific notation allowed, e.g. 1e6).
    #[arg(long)]
    n: Option<String>,
    /// Edge probability.
    #[arg(long)]
    p: Option<String>,
    /// Initially active vertices.
    #[arg(long)]
    a: Option<String>,
    /// Activation threshold (default 2).
    #[arg(long)]
    r: Option<String>,
    /// Scaled edge probability p n.
    #[arg(long)]
    c: Option<String>,
    /// Scaled initial fraction a / n.
    #[arg(long)]
    theta: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    /// Master seed.
    #[arg(long)]
    seed: Option<String>,
    /// Worker threads (0 = one per core).
    #[arg(long)]
    workers: Option<String>,
    /// csv or json.
    #[arg(long)]
    format: Option<String>,
    /// Output file (default standard output).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Fraction of n above which the active set counts as big.
    #[arg(long = "big-threshold")]
    big_threshold: Option<String>,
    /// markproc or graph.
    #[arg(long)]
    engine: Option<String>,
    /// Sweep axis: a or p.
    #[arg(long)]
    axis: Option<String>,
    /// Comma-separated sweep values.
    #[arg(long)]
    values: Option<String>,
    /// Dynamical model: activation, infection or edges.
    #[arg(long)]
    model: Option<String>,
    /// Reduced trial counts for validate.
    #[arg(long)]
    quick: bool,
    /// Emit the activation-time histogram instead of outcomes.
    #[arg(long)]
    trajectory: bool,
    /// Comma-separated criterion ids for validate.
    #[arg(long)]
    only: Option<String>,
    /// File of key=value lines; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Flags {
    fn resolve(&self, command: &str) -> anyhow::Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(c) = cfg.get("command") {
            if c != command {
                anyhow::bail!("config file is for '{c}', not '{command}'");
            }
        }
        let pairs: [(&str, &Option<String>); 16] = [
            ("n", &self.n),
            ("p", &self.p),
            ("a", &self.a),
            ("r", &self.r),
            ("c", &self.c),
            ("theta", &self.theta),
            ("trials", &self.trials),
            ("seed", &self.seed),
            ("workers", &self.workers),
            ("format", &self.format),
            ("big_threshold", &self.big_threshold),
            ("engine", &self.engine),
            ("axis", &self.axis),
            ("values", &self.values),
            ("model", &self.model),
            ("only", &self.only),
        ];
        for (key, value) in pairs {
            if let Some(v) = value {
                cfg.set(key, v.clone());
            }
        }
        if self.quick {
            cfg.set("quick", "true");
        }
        if self.trajectory {
            cfg.set("trajectory", "true");
        }
        let mut cleaned = RunConfig::default();
        for (k, v) in cfg.iter().filter(|(k, _)| *k != "command") {
            cleaned.set(k, v);
        }
        Ok(cleaned)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (name, flags) = match &cli.command {
        Command::Theory(f) => ("theory", f),
        Command::Simulate(f) => ("simulate", f),
        Command::Sweep(f) => ("sweep", f),
        Command::Exact(f) => ("exact", f),
        Command::Dyn(f) => ("dyn", f),
        Command::Validate(f) => ("validate", f),
    };
    let outcome = flags
        .resolve(name)
        .map_err(commands::Failure::Usage)
        .and_then(|cfg| commands::dispatch(name, cfg, flags.out.as_deref()));
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        // A closed downstream pipe (e.g. `| head`) is not an error.
        Err(f) if f.is_broken_pipe() => ExitCode::SUCCESS,
        Err(f) => {
            if let Some(msg) = f.message() {
                eprintln!("error: {msg}");
            }
            ExitCode::from(f.code())
        }
    }
}
