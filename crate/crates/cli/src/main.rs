//! `boosthpo`: train, grid-search and tune boosted trees from a JSON config.
//!
//! Exit codes: 0 success, 2 config error, 3 data error, 4 runtime failure.

mod commands;
mod config;
mod curve;
mod error;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use config::{ExperimentConfig, Preset};
use error::{CliError, Result};

#[derive(Parser)]
#[command(name = "boosthpo", version, about = "Gradient boosting experiments with grid search and Bayesian optimization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Named grid or search space: xgb-grid, lgbm-grid, cat-grid, xgb-hpo,
    /// lgbm-hpo, cat-hpo.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    slots_per_host: Option<usize>,
    /// Output directory (default `out`).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Train one model with the config's `params`.
    Train(Common),
    /// Evaluate every point of a grid profile.
    Grid(Common),
    /// Bayesian optimization over a search space.
    Hpo(Common),
    /// Score a saved model on the configured data.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: PathBuf,
    },
    /// Score the class-frequency baseline.
    Baseline(Common),
    /// Best score against cumulative runtime, from a trial log.
    ReportCurve {
        /// `trials.csv` or `trials.jsonl`.
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// The logged metric is minimized.
        #[arg(long)]
        minimize: bool,
    },
    /// Runs one grid partition; started by `grid`.
    #[command(hide = true)]
    Worker {
        #[arg(long)]
        job: PathBuf,
        #[arg(long)]
        partition: usize,
    },
}

#[derive(Serialize)]
struct Metadata {
    command: String,
    args: Vec<String>,
    version: &'static str,
    started_unix_ms: u128,
    finished_unix_ms: u128,
    elapsed_seconds: f64,
    error: Option<String>,
}

fn unix_ms() -> u128 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis()).unwrap_or(0)
}

fn resolve(common: &Common) -> Result<(ExperimentConfig, PathBuf)> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(name) = &common.preset {
        cfg.apply_preset(name.parse::<Preset>()?)?;
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(w) = common.workers {
        cfg.workers = w;
    }
    if let Some(s) = common.slots_per_host {
        cfg.slots_per_host = s;
    }
    let out = common.out.clone().or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("out"));
    cfg.out = Some(out.clone());
    cfg.validate()?;
    Ok((cfg, out))
}

fn prepare_out(out: &Path) -> Result<()> {
    fs::create_dir_all(out).map_err(|e| CliError::Runtime(format!("{}: {e}", out.display())))
}

/// Runs an experiment command and records its timing in `metadata.json`,
/// the only output that differs between identical runs.
fn experiment(name: &str, common: &Common, body: impl FnOnce(&ExperimentConfig, &Path) -> Result<()>) -> Result<()> {
    let (cfg, out) = resolve(common)?;
    prepare_out(&out)?;
    commands::write_json(&out.join("config.json"), &cfg)?;
    let (started_unix_ms, clock) = (unix_ms(), Instant::now());
    let result = body(&cfg, &out);
    let meta = Metadata {
        command: name.to_string(),
        args: std::env::args().skip(1).collect(),
        version: env!("CARGO_PKG_VERSION"),
        started_unix_ms,
        finished_unix_ms: unix_ms(),
        elapsed_seconds: clock.elapsed().as_secs_f64(),
        error: result.as_ref().err().map(ToString::to_string),
    };
    commands::write_json(&out.join("metadata.json"), &meta)?;
    result
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(c) => experiment("train", &c, commands::cmd_train),
        Command::Grid(c) => experiment("grid", &c, commands::cmd_grid),
        Command::Hpo(c) => experiment("hpo", &c, commands::cmd_hpo),
        Command::Baseline(c) => experiment("baseline", &c, commands::cmd_baseline),
        Command::Eval { common, model } => experiment("eval", &common, |cfg, out| commands::cmd_eval(cfg, &model, out)),
        Command::ReportCurve { log, out, minimize } => {
            let out = out.unwrap_or_else(|| PathBuf::from("out"));
            prepare_out(&out)?;
            commands::cmd_report_curve(&log, minimize, &out)
        }
        Command::Worker { job, partition } => {
            boosthpo::orchestrator::run_worker(&job, partition).map_err(|e| CliError::Runtime(e.to_string()))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("boosthpo: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
