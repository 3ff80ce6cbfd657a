//! Command-line front end: one subcommand per pipeline stage, all
//! randomness funneled through the config seed, reports written as CSV or
//! JSON plus a run manifest for reproducibility.

mod commands;
mod config;
mod manifest;

pub use config::{parse_config, RunConfig};
pub use manifest::RunManifest;

use crate::error::Error;
use clap::{Parser, Subcommand, ValueEnum};
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "dmf", version, about = "Synthesize sensor modalities from correlated time series")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Path to the TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Output directory for reports and the run manifest.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,

    /// Override the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads for sweep jobs (0 = library default).
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,

    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = ReportFormat::Csv)]
    pub format: ReportFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Align raw CSV series onto the master grid and write the wide CSV.
    Ingest,
    /// Correlation tables and the predictor ranking.
    Correlate,
    /// Principal-direction angles between modality groups.
    Eigen,
    /// Train the configured ITR/UTR models and save checkpoints.
    Train,
    /// Score saved models on the validation window.
    Evaluate,
    /// Retrain across an architecture grid.
    SweepComplexity,
    /// Retrain with the top-m ranked predictors for each m.
    SweepModalities,
    /// Join the modality sweep with the transmission-cost model.
    Tradeoff,
    /// Generate a synthetic dataset with known couplings.
    Synth,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Ingest => "ingest",
            Command::Correlate => "correlate",
            Command::Eigen => "eigen",
            Command::Train => "train",
            Command::Evaluate => "evaluate",
            Command::SweepComplexity => "sweep-complexity",
            Command::SweepModalities => "sweep-modalities",
            Command::Tradeoff => "tradeoff",
            Command::Synth => "synth",
        }
    }
}

/// Parse `args` and run. Returns the process exit code; errors are printed
/// to stderr as a one-line structured report.
pub fn run_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap handles --help/--version with its own exit codes
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match commands::execute(&cli) {
        Ok(artifacts) => {
            for path in artifacts {
                println!("wrote {}", path.display());
            }
            0
        }
        Err(err) => {
            report_error(&err);
            err.exit_code()
        }
    }
}

fn report_error(err: &Error) {
    let report = serde_json::json!({
        "error": err.to_string(),
        "kind": err.kind(),
        "exit_code": err.exit_code(),
    });
    eprintln!("{report}");
}

/// Entry point used by the thin `dmf` binary.
pub fn run_cli() -> i32 {
    run_from_args(std::env::args_os())
}
