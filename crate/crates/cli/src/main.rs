//! `lrdlab` command-line interface.
//!
//! Exit status: 0 on success, 1 on input errors, 2 on numerical failures
//! (non-convergence and similar). Partial output is kept on disk either way.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lrdlab::{Frequency, HurstMethod, LrdError};

#[derive(Debug, Parser)]
#[command(
    name = "lrdlab",
    version,
    about = "Long-range dependence analysis of index returns"
)]
pub struct Cli {
    /// TOML file with defaults for any flag; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory for result and plot-data files.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Format of the summary printed to stdout.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load a daily `date,close` CSV, downsample, and write prices and log-returns.
    Ingest(DataArgs),
    /// Moments, normality tests, histogram and QQ plot data.
    Diagnose(DiagnoseArgs),
    /// Hurst exponent by rescaled range or detrended fluctuation analysis.
    Hurst(HurstArgs),
    /// ARFIMA-FIGARCH maximum-likelihood fit.
    Fit(FitArgs),
    /// Simulate ARFIMA-FIGARCH returns, optionally as a log-price path ensemble.
    Simulate(SimulateArgs),
    /// Select the nearest ensemble path to the data and run the full battery on it.
    Evaluate(EvaluateArgs),
    /// Every table row for one index and frequency.
    ReportAll(ReportArgs),
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Daily price CSV with `date,close` columns.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub frequency: Option<Frequency>,
    /// Name used in outputs; defaults to the data file stem.
    #[arg(long)]
    pub label: Option<String>,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = 60)]
    pub bins: usize,
}

#[derive(Debug, Args)]
pub struct HurstArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub method: Option<HurstMethod>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub truncation_lag: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of returns per series.
    #[arg(long, default_value_t = 8000)]
    pub n: usize,
    /// Discarded warm-up draws; defaults to the truncation lag.
    #[arg(long)]
    pub burn_in: Option<usize>,
    #[arg(long)]
    pub truncation_lag: Option<usize>,
    /// Write this many log-price paths (seeds seed, seed+1, ...) as an ensemble.
    #[arg(long)]
    pub paths: Option<usize>,
    /// Ensemble output file; `.bin` or `.lmp` selects the binary format.
    #[arg(long, requires = "paths")]
    pub ensemble: Option<PathBuf>,
    /// Frequency recorded in the ensemble header.
    #[arg(long)]
    pub frequency: Option<Frequency>,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub phi: Option<f64>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub d_m: Option<f64>,
    #[arg(long)]
    pub omega: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub d_v: Option<f64>,
    #[arg(long)]
    pub nu: Option<f64>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Log-price path ensemble (CSV, or binary with `.bin`/`.lmp`).
    #[arg(long)]
    pub ensemble: Option<PathBuf>,
    #[arg(long)]
    pub truncation_lag: Option<usize>,
    /// Paths sampled for the ensemble-wide DFA summary.
    #[arg(long, default_value_t = lrdlab::synth_eval::DEFAULT_SUPPLEMENTARY_PATHS)]
    pub supplementary_paths: usize,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub truncation_lag: Option<usize>,
    #[arg(long, default_value_t = 60)]
    pub bins: usize,
    /// Also evaluate this ensemble against the data.
    #[arg(long)]
    pub ensemble: Option<PathBuf>,
}

/// How a command ended when it produced output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Status {
    Ok,
    InputFailure,
    NumericalFailure,
}

impl Status {
    fn code(self) -> u8 {
        match self {
            Status::Ok => 0,
            Status::InputFailure => 1,
            Status::NumericalFailure => 2,
        }
    }
}

fn error_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<LrdError>() {
        Some(le) if !le.is_input_error() => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli) {
        Ok(status) => ExitCode::from(status.code()),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(error_code(&e))
        }
    }
}
