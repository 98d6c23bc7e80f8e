//! Batch front end for the privacy-pricing models: scenario files in, CSV
//! reports out.

pub mod commands;
pub mod error;
pub mod report;
pub mod scenario;

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use privacy_pricing::DemandMode;

pub use error::{CliError, Result};
pub use report::Table;
pub use scenario::{Scenario, ScenarioError};

#[derive(Debug, Parser)]
#[command(
    name = "ppricing",
    version,
    about = "Privacy-aware pricing of people-centric services"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Certify optima against the brute-force lattice oracle.
    #[arg(long, global = true)]
    pub verify: bool,

    /// Exit with status 3 when a bundle optimum needed the numeric fallback.
    #[arg(long, global = true)]
    pub strict: bool,

    /// Bundle demand model.
    #[arg(long, global = true, default_value = "paper", value_parser = parse_mode)]
    pub demand_mode: DemandMode,

    /// Write `<dir>/<command>.csv` instead of printing.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,

    /// Override the scenario's simulation seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

impl Default for GlobalArgs {
    fn default() -> Self {
        Self {
            verify: false,
            strict: false,
            demand_mode: DemandMode::PaperForm,
            out: None,
            seed: None,
        }
    }
}

fn parse_mode(s: &str) -> std::result::Result<DemandMode, String> {
    s.parse().map_err(|e: privacy_pricing::Error| e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Market {
    Separate,
    Complement,
    Substitute,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a quality curve to `r,quality` samples.
    Fit { samples: PathBuf },

    /// Profit-maximizing privacy levels and fee.
    Optimize {
        market: Market,
        scenario: PathBuf,
        /// Only this service (separate markets).
        #[arg(long)]
        service: Option<String>,
    },

    /// Bundle or sell separately.
    Decide { scenario: PathBuf },

    /// Shapley allocation and core bounds for the bundle's providers.
    Share {
        #[arg(required_unless_present_any = ["profits", "coalitions"])]
        scenario: Option<PathBuf>,
        /// Standalone and joint profits `v1,v2,v12`.
        #[arg(long, value_delimiter = ',', num_args = 1, allow_hyphen_values = true, conflicts_with_all = ["scenario", "coalitions"])]
        profits: Option<Vec<f64>>,
        /// Player names for `--profits`.
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "S1,S2",
            requires = "profits"
        )]
        players: Vec<String>,
        /// `coalition,value` table, members joined by `+`.
        #[arg(long, conflicts_with = "scenario")]
        coalitions: Option<PathBuf>,
    },

    /// Monte-Carlo profit at the optima.
    Simulate {
        scenario: PathBuf,
        #[arg(long)]
        service: Option<String>,
        #[arg(long)]
        draws: Option<u64>,
    },

    /// Certify every optimum in the scenario against lattice oracles.
    Verify {
        scenario: PathBuf,
        /// Points per axis for standalone surfaces.
        #[arg(long, default_value_t = 400)]
        grid: usize,
        /// Points per axis for bundle surfaces.
        #[arg(long, default_value_t = 120)]
        bundle_grid: usize,
    },

    /// Re-optimize over a range of one parameter.
    Sweep {
        scenario: PathBuf,
        /// `market.M`, `bundle.gamma` or `service.NAME.{N,c,alpha1,alpha2,alpha3,r}`.
        #[arg(long)]
        param: String,
        #[arg(long, allow_hyphen_values = true)]
        start: f64,
        #[arg(long, allow_hyphen_values = true)]
        stop: f64,
        #[arg(long)]
        steps: usize,
        /// `bundle` or a service name.
        #[arg(long)]
        target: Option<String>,
    },

    /// Buy probability under both demand modes plus a Monte-Carlo estimate.
    Demand {
        market: Market,
        #[arg(long)]
        fee: f64,
        #[arg(long)]
        u1: f64,
        #[arg(long)]
        u2: Option<f64>,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        gamma: f64,
        #[arg(long, default_value_t = 1_000_000)]
        draws: u64,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Fit { .. } => "fit",
            Command::Optimize { .. } => "optimize",
            Command::Decide { .. } => "decide",
            Command::Share { .. } => "share",
            Command::Simulate { .. } => "simulate",
            Command::Verify { .. } => "verify",
            Command::Sweep { .. } => "sweep",
            Command::Demand { .. } => "demand",
        }
    }
}

/// A finished report. `fallback` is set when a bundle optimum came from the
/// numeric search rather than the closed form.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub command: &'static str,
    pub table: Table,
    pub fallback: Option<String>,
}

/// Runs one command, writes its table and maps `--strict` fallbacks to an
/// error after the output is on disk.
pub fn run(cli: &Cli) -> Result<Outcome> {
    let outcome = commands::execute(&cli.command, &cli.global)?;
    match &cli.global.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            let file = fs::File::create(dir.join(format!("{}.csv", outcome.command)))?;
            outcome.table.write(file)?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            outcome.table.write(&mut lock)?;
            lock.flush()?;
        }
    }
    if cli.global.strict {
        if let Some(reason) = &outcome.fallback {
            return Err(CliError::Fallback(reason.clone()));
        }
    }
    Ok(outcome)
}
