//! `pselect`: selective inference after forward stepwise or least angle
//! regression, plus the Monte Carlo experiment suite.

mod commands;
mod config;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{CommandFactory, FromArgMatches, Parser, Subcommand};
use pselect::sim::{ErrorFamily, ExperimentKind};
use pselect::{Method, ResponseColumn};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] pselect::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use pselect::Error as E;
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(E::InvalidDataset(_) | E::InvalidConfig(_) | E::DimensionMismatch { .. } | E::Csv(_)) => 2,
            CliError::Core(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "pselect", version, about = "Selective inference after forward stepwise and least angle regression")]
pub struct Cli {
    /// File of `key = value` lines supplying defaults for any flag.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Worker threads for repetitions (default: all cores).
    #[arg(long, global = true, env = "PSELECT_THREADS", value_parser = clap::value_parser!(u64).range(1..))]
    pub threads: Option<u64>,

    /// Log progress and bootstrap escalations to stderr.
    #[arg(short, long, global = true)]
    pub verbose: bool,

    #[command(subcommand)]
    pub command: Command,
}

/// Error-scale handling: `known:<sigma>`, `plugin` or `bootstrap`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SigmaArg {
    Known(f64),
    Plugin,
    Bootstrap,
}

impl FromStr for SigmaArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "plugin" | "plug-in" => Ok(SigmaArg::Plugin),
            "bootstrap" | "boot" => Ok(SigmaArg::Bootstrap),
            other => {
                let value = other
                    .strip_prefix("known:")
                    .ok_or_else(|| format!("expected known:<sigma>, plugin or bootstrap, got {s:?}"))?;
                let sigma: f64 = value.parse().map_err(|_| format!("cannot parse sigma {value:?}"))?;
                if sigma > 0.0 && sigma.is_finite() {
                    Ok(SigmaArg::Known(sigma))
                } else {
                    Err(format!("sigma must be positive, got {value}"))
                }
            }
        }
    }
}

#[derive(Debug, clap::Args)]
pub struct BootstrapArgs {
    /// Initial bootstrap resamples B.
    #[arg(long, value_name = "B")]
    pub resamples: Option<usize>,
    /// Resamples used when the first batch leaves the pivot vacuous.
    #[arg(long)]
    pub max_resamples: Option<usize>,
    /// Padding constant; the padding is gamma * n^(-1/4).
    #[arg(long)]
    pub gamma: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a path on a CSV dataset and report per-step p-values and intervals.
    Infer {
        /// CSV file with one column per variable.
        #[arg(long, value_name = "FILE")]
        data: PathBuf,
        /// Response column, by header name or zero-based index.
        #[arg(long, value_name = "COLUMN")]
        response: ResponseColumn,
        /// The file has no header row.
        #[arg(long)]
        no_header: bool,
        /// Rescale predictors to unit norm first.
        #[arg(long)]
        normalize: bool,
        #[arg(long, default_value = "lar")]
        method: Method,
        /// Number of path steps k.
        #[arg(long, short = 'k', default_value_t = 1)]
        steps: usize,
        #[arg(long, default_value = "known:1")]
        sigma: SigmaArg,
        #[arg(long, default_value_t = 0.1)]
        alpha: f64,
        /// Plug-in and bootstrap scale inflation, at least 1.
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[command(flatten)]
        bootstrap: BootstrapArgs,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Write inference.csv here instead of printing CSV to stdout.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Run one of the Monte Carlo experiments and write the CSV tables.
    Simulate {
        /// null, signal, hetero or highdim.
        kind: ExperimentKind,
        /// Error laws, comma separated (default: all four).
        #[arg(long, value_delimiter = ',')]
        dist: Vec<ErrorFamily>,
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long)]
        alpha: Option<f64>,
        /// Path steps (default: 1 for null, 3 otherwise).
        #[arg(long, short = 'k')]
        steps: Option<usize>,
        #[arg(long)]
        method: Option<Method>,
        /// Use θ = 0 for the hetero and highdim experiments.
        #[arg(long)]
        null: bool,
        #[arg(long)]
        c: Option<f64>,
        #[command(flatten)]
        bootstrap: BootstrapArgs,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, value_name = "DIR", default_value = "out")]
        out: PathBuf,
    },
    /// The many-means experiment: largest of d group means of m replicates.
    Manymeans {
        #[arg(long, default_value_t = 50_000)]
        d: usize,
        #[arg(long, default_value_t = 2)]
        m: usize,
        #[arg(long, default_value_t = 500)]
        reps: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, value_name = "DIR", default_value = "out")]
        out: PathBuf,
    },
    /// Print the tables found in an output directory.
    Report {
        #[arg(default_value = "out")]
        dir: PathBuf,
    },
}

/// Parses the command line, folding in a config file when one is named.
fn parse_args(args: Vec<OsString>) -> Result<Cli, clap::Error> {
    let cmd = Cli::command();
    let matches = cmd.clone().try_get_matches_from(&args)?;
    let cli = Cli::from_arg_matches(&matches)?;
    let Some(path) = &cli.config else {
        return Ok(cli);
    };
    let merged = config::load(path)
        .and_then(|entries| config::merge(&cmd, &matches, args, &entries))
        .map_err(|e| Cli::command().error(clap::error::ErrorKind::InvalidValue, e.to_string()))?;
    Cli::try_parse_from(merged)
}

fn main() -> ExitCode {
    let cli = match parse_args(std::env::args_os().collect()) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    env_logger::Builder::new()
        .filter_level(if cli.verbose { log::LevelFilter::Debug } else { log::LevelFilter::Warn })
        .parse_env("PSELECT_LOG")
        .init();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
