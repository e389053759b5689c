//! `fbmdrift` - simulate fBm-driven SDEs and estimate their drift from
//! discrete observations.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure.

mod commands;
mod config;
mod output;

use clap::{Args, Parser, Subcommand};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(String),
    Io(String),
}

impl CliError {
    /// Classify a library error: domain/range problems are configuration
    /// errors (exit 2), runtime arithmetic problems are numerical (exit 3).
    fn config(e: fbmdrift::Error) -> Self {
        use fbmdrift::Error::*;
        match e {
            Domain(_) | InsufficientData(_) | EmptyEnsemble => CliError::Config(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }

    fn numerical(e: fbmdrift::Error) -> Self {
        use fbmdrift::Error::*;
        match e {
            Domain(_) => CliError::Config(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }

    fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical error: {m}"),
            CliError::Io(m) => write!(f, "io error: {m}"),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "fbmdrift",
    version,
    about = "Simulate SDEs driven by fractional Brownian motion and estimate their drift"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample one fBm path on a uniform grid
    Fbm(FbmArgs),
    /// Simulate the SDE and emit the observation series
    Sde(SdeArgs),
    /// Estimate drift from an observation CSV
    Estimate(EstimateArgs),
    /// Run a Monte Carlo experiment from a config file
    Experiment(ExperimentArgs),
    /// Diagnostics for the fractional-derivative machinery
    #[command(subcommand)]
    Verify(VerifyCommand),
}

#[derive(Args)]
struct FbmArgs {
    /// Hurst parameter in (0, 1)
    #[arg(long)]
    hurst: f64,
    /// Time horizon
    #[arg(long)]
    horizon: f64,
    /// Grid step (must divide the horizon)
    #[arg(long)]
    step: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV (columns t,value); stdout when absent
    #[arg(long)]
    out: Option<std::path::PathBuf>,
}

#[derive(Args)]
struct SdeArgs {
    #[arg(long)]
    theta: f64,
    /// Hurst parameter in (1/2, 1)
    #[arg(long)]
    hurst: f64,
    /// Observation level: 2^{2n} observations with spacing 2^{-n} on [0, 2^n]
    #[arg(long)]
    n: u32,
    /// Euler sub-steps per observation interval
    #[arg(long, default_value_t = 8)]
    refinement: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.0)]
    x0: f64,
    /// Coefficient pair: 'builtin:<name>' or '<a expr>;<b expr>'
    #[arg(long)]
    coeff: String,
    /// Output CSV (columns k,t,x); stdout when absent
    #[arg(long)]
    out: Option<std::path::PathBuf>,
}

#[derive(Args)]
struct EstimateArgs {
    /// Observation CSV with columns k,t,x
    #[arg(long)]
    input: std::path::PathBuf,
    /// Coefficient pair: 'builtin:<name>' or '<a expr>;<b expr>'
    #[arg(long)]
    coeff: String,
    /// Hurst parameter; required by the weighted estimator only
    #[arg(long)]
    hurst: Option<f64>,
    /// weighted | simple | both
    #[arg(long, default_value = "both")]
    estimator: String,
    /// Output CSV; stdout when absent
    #[arg(long)]
    out: Option<std::path::PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Config file (TOML key-value; see the shipped configs/ examples)
    #[arg(long)]
    config: std::path::PathBuf,
    /// Output directory for report.csv, rates.csv, estimates.csv
    #[arg(long, default_value = ".")]
    out_dir: std::path::PathBuf,
    /// Also emit report.md shaped like the published error tables
    #[arg(long)]
    markdown: bool,
    /// Override the config file's theta
    #[arg(long)]
    theta: Option<f64>,
    /// Override the config file's replicate count
    #[arg(long)]
    replicates: Option<usize>,
    /// Override the config file's refinement
    #[arg(long)]
    refinement: Option<usize>,
    /// Override the config file's seed
    #[arg(long)]
    seed: Option<u64>,
    /// Override the driver amplitude convention: exact | unit-horizon
    #[arg(long)]
    driver: Option<String>,
}

#[derive(Subcommand)]
enum VerifyCommand {
    /// Sup-ratio statistic and scaling regression of the fractional
    /// derivative over an fBm ensemble
    FracDeriv(FracDerivArgs),
}

#[derive(Args)]
struct FracDerivArgs {
    /// Hurst parameter in (1/2, 1)
    #[arg(long)]
    hurst: f64,
    /// Fractional order in (1 - H, 1/2)
    #[arg(long)]
    alpha: f64,
    /// Log exponent, > 1/2
    #[arg(long, default_value_t = 0.6)]
    gamma: f64,
    #[arg(long, default_value_t = 100)]
    paths: usize,
    #[arg(long, default_value_t = 8.0)]
    horizon: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Sampling step (must be a dyadic fraction <= 2^-8 for the scaling scan)
    #[arg(long, default_value_t = 0.00390625)]
    step: f64,
}

fn init_threads() -> Result<(), CliError> {
    if let Ok(value) = std::env::var("FBMDRIFT_THREADS") {
        let count: usize = value
            .parse()
            .map_err(|_| CliError::Config(format!("FBMDRIFT_THREADS must be an integer, got '{value}'")))?;
        if count > 0 {
            rayon::ThreadPoolBuilder::new()
                .num_threads(count)
                .build_global()
                .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
        }
    }
    Ok(())
}

fn run() -> Result<(), CliError> {
    init_threads()?;
    match Cli::parse().command {
        Command::Fbm(args) => commands::fbm(args),
        Command::Sde(args) => commands::sde(args),
        Command::Estimate(args) => commands::estimate(args),
        Command::Experiment(args) => commands::experiment(args),
        Command::Verify(VerifyCommand::FracDeriv(args)) => commands::frac_deriv(args),
    }
}

fn main() {
    if let Err(e) = run() {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}
