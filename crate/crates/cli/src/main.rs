//! `fracflow`: run the forecasting pipeline stage by stage.

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::{Method, RunConfig};

/// Exit code 2 for bad usage or invalid input, 1 for anything else.
#[derive(Debug)]
pub enum CliError {
    Usage(anyhow::Error),
    Internal(anyhow::Error),
}

impl From<fracflow_core::Error> for CliError {
    fn from(e: fracflow_core::Error) -> Self {
        if e.is_validation() {
            CliError::Usage(e.into())
        } else {
            CliError::Internal(e.into())
        }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Internal(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Internal(e.into())
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[macro_export]
macro_rules! usage {
    ($($arg:tt)*) => {
        $crate::CliError::Usage(anyhow::anyhow!($($arg)*))
    };
}

#[derive(Debug, Parser)]
#[command(name = "fracflow", version, about = "Production forecasting pipeline for hydraulic fracturing field databases")]
pub struct Cli {
    /// JSON run configuration; defaults apply to anything it leaves out.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Root seed, overriding the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores). Outputs do not depend on it.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic field database as raw source files.
    Synth(OutArgs),
    /// Merge source files into one encoded field table.
    Ingest(IngestArgs),
    /// Fill missing numeric cells.
    Impute(ImputeArgs),
    /// Density clusters, anomaly scores and a t-SNE embedding.
    Cluster(TableArgs),
    /// Grid search, cross-validate and fit the final model.
    Train(TrainArgs),
    /// Importance, RFE curve, OVAT tornado and bootstrap interval.
    Analyze(AnalyzeArgs),
    /// Run every stage from synthetic data to the analysis report.
    Report(OutArgs),
}

#[derive(Debug, Args)]
pub struct OutArgs {
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Directory holding the source CSV files.
    #[arg(long)]
    pub sources: PathBuf,
    /// Directory of dictionary JSON files; none means no normalization.
    #[arg(long)]
    pub dicts: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ImputeArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    #[arg(long)]
    pub rank: Option<usize>,
    /// Cluster labels CSV written by `cluster`; needed by cluster_mean.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Row missing-fraction threshold for `drop`.
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TableArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Grid JSON `{"depth": [...], "l2_leaf": [...]}`, overriding the config.
    #[arg(long)]
    pub grid: Option<PathBuf>,
    /// Also report the score under a log-transformed target.
    #[arg(long)]
    pub log_target: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub input: PathBuf,
    /// Run OVAT over every feature, not only the design group.
    #[arg(long)]
    pub all_features: bool,
    #[arg(long)]
    pub out: PathBuf,
}

fn init_logging() {
    let env = env_logger::Env::new().filter_or("FRACFLOW_LOG", "error");
    let _ = env_logger::Builder::from_env(env).format_timestamp(None).try_init();
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(usage!("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .map_err(|e| CliError::Internal(e.into()))?;
    }
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    match cli.command {
        Command::Synth(a) => commands::synth(&cfg, &a),
        Command::Ingest(a) => commands::ingest(&cfg, &a),
        Command::Impute(a) => commands::impute(&cfg, &a),
        Command::Cluster(a) => commands::cluster(&cfg, &a),
        Command::Train(a) => commands::train(&cfg, &a),
        Command::Analyze(a) => commands::analyze(&cfg, &a),
        Command::Report(a) => commands::report(&cfg, &a),
    }
}

fn main() -> ExitCode {
    init_logging();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(CliError::Internal(e)) => {
            eprintln!("internal error: {e:#}");
            ExitCode::from(1)
        }
    }
}
