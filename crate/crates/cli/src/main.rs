//! `orbilink`: batch front end for pass generation, analytic rates,
//! simulation and validation.
//!
//! Exit codes: 0 success (or a passing verdict), 1 failing verdict,
//! 2 usage or configuration error, 3 data error.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod output;
mod spec;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use spec::{Drift, ExperimentSpec, Overrides, Policy};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("data: {0}")]
    Data(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
        }
    }
}

impl From<orbilink::Error> for CliError {
    fn from(e: orbilink::Error) -> Self {
        match e {
            orbilink::Error::Config(m) => CliError::Usage(m),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "orbilink", version, about = "Satellite entanglement distribution experiments")]
struct Cli {
    /// Experiment description (TOML).
    #[arg(long, global = true)]
    spec: Option<PathBuf>,
    /// Output directory; overrides `output_dir` in the spec.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seeds: Option<u64>,
    #[arg(long, global = true, value_enum)]
    policy: Option<Policy>,
    #[arg(long = "m-sat", global = true)]
    m_sat: Option<u32>,
    #[arg(long, global = true, value_enum)]
    drift: Option<Drift>,
    /// Pass CSV to use instead of propagating the orbit; one per station, in order.
    #[arg(long = "profile", global = true)]
    profiles: Vec<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Propagate the pass over each station and write pass CSVs.
    GenPass {
        /// Only this station.
        #[arg(long)]
        station: Option<String>,
    },
    /// Analytic rate series.
    Rate,
    /// Optimal memory allocation between two stations.
    Allocate,
    /// Run the simulation for every seed.
    Simulate {
        /// Also write each run's round log (NDJSON).
        #[arg(long)]
        round_log: bool,
    },
    /// Score simulation outputs against predicted per-bin moments.
    Validate,
    /// Figure-ready CSVs joining analytic and simulated series.
    Report,
}

fn run(cli: Cli) -> Result<bool, CliError> {
    let path = cli
        .spec
        .as_ref()
        .ok_or_else(|| CliError::Usage("--spec <file> is required".into()))?;
    let mut spec = ExperimentSpec::load(path)?;
    spec.apply(&Overrides {
        out: cli.out.clone(),
        seeds: cli.seeds,
        policy: cli.policy,
        m_sat: cli.m_sat,
        drift: cli.drift,
    });
    spec.validate()?;
    let ctx = commands::Context::new(spec, cli.profiles)?;
    match cli.command {
        Command::GenPass { station } => commands::gen_pass(&ctx, station.as_deref()).map(|_| true),
        Command::Rate => commands::rate(&ctx).map(|_| true),
        Command::Allocate => commands::allocate(&ctx).map(|_| true),
        Command::Simulate { round_log } => commands::simulate(&ctx, round_log).map(|_| true),
        Command::Validate => commands::validate(&ctx),
        Command::Report => commands::report(&ctx).map(|_| true),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("orbilink: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
