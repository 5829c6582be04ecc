//! Batch front end: `simulate`, `delta`, `convergence` and `selfcheck`.

mod commands;
mod config;
mod table;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use commands::{cmd_convergence, cmd_delta, cmd_selfcheck, cmd_simulate, exit_code, local_time_oracle_error, Outcome};
pub use config::{
    ConvergenceSection, DeltaSection, EstimatorKind, InitialFlowKind, PicardSection, RunConfig, SimulateSection, SolverKind,
    MAX_PARTICLES, MAX_STEPS,
};
pub use table::{write_csv, ResultRow, ResultTable};

use crate::error::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "mfsde", version, about = "Monte Carlo engine for mean-field SDEs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Caps the worker pool.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Overrides the configured output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Solve and write per-node statistics.
    Simulate,
    /// Estimate the delta with the configured estimators.
    Delta,
    /// Error-versus-parameter sweeps.
    Convergence,
    /// Oracle checks; exits with 4 on failure.
    Selfcheck,
}

/// Runs `command` on a pool of `workers` threads (all cores when `None`).
pub fn execute(command: Command, cfg: &RunConfig, out: &std::path::Path, workers: Option<usize>) -> Result<Outcome> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        if w == 0 {
            return Err(Error::Config("`--workers` must be at least 1".into()));
        }
        builder = builder.num_threads(w);
    }
    let pool = builder.build().map_err(|e| Error::Config(e.to_string()))?;
    pool.install(|| match command {
        Command::Simulate => cmd_simulate(cfg, out),
        Command::Delta => cmd_delta(cfg, out),
        Command::Convergence => cmd_convergence(cfg, out),
        Command::Selfcheck => cmd_selfcheck(cfg, out),
    })
}

fn load(cli: &Cli) -> Result<RunConfig> {
    let path = cli.config.as_ref().ok_or_else(|| Error::Config("`--config` is required".into()))?;
    let mut cfg = RunConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output = out.clone();
    }
    Ok(cfg)
}

/// Parses `args`, runs the command, and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let cfg = match load(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    match execute(cli.command, &cfg, &cfg.output, cli.workers) {
        Ok(outcome) => {
            for f in &outcome.files {
                println!("{}", f.display());
            }
            if cli.command == Command::Selfcheck && !outcome.passed {
                eprintln!("selfcheck: one or more checks failed");
                4
            } else {
                0
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
