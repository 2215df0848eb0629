//! Command-line front end for the packet-scattering library.
//!
//! Exit codes: 0 success, 2 configuration, 3 no stationary point, 4
//! quadrature non-convergence, 5 verification failure. Argument parse errors
//! exit with 2 through clap, which matches the configuration class.

mod commands;
mod config;
mod records;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qaction_core::{DetectionError, StationarityError};
use thiserror::Error;

use config::RunConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Stationarity(#[from] StationarityError),
    #[error("quadrature: {0}")]
    Quadrature(String),
    #[error("verification failed: {failed} of {total} invariants")]
    Verification { failed: usize, total: usize },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Stationarity(_) => 3,
            CliError::Quadrature(_) => 4,
            CliError::Verification { .. } => 5,
        }
    }
}

impl From<DetectionError> for CliError {
    fn from(err: DetectionError) -> Self {
        match err {
            DetectionError::Config(e) => CliError::Config(e.to_string()),
            DetectionError::Stationarity(e) => CliError::Stationarity(e),
            other @ (DetectionError::NotConverged { .. } | DetectionError::ZeroIntegral) => {
                CliError::Quadrature(other.to_string())
            }
            // Regime preconditions (non-relativistic speed, decay range):
            // the configuration asked for something outside the contract.
            other => CliError::Config(other.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "qaction",
    version,
    about = "Closed-form Gaussian packet amplitudes, stationary inner times and detector scans"
)]
struct Cli {
    /// TOML run configuration (required by every subcommand).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Write the output here instead of stdout; overrides [output] paths.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Override experiment.hbar from the configuration.
    #[arg(long, global = true, value_name = "VALUE")]
    hbar: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Transition amplitude at a given or stationary inner time.
    Amplitude {
        /// Inner time; omitted means the stationary one.
        #[arg(long)]
        c: Option<f64>,
    },
    /// Action pieces (full, classical, quadratic correction, derivative).
    Action {
        /// Inner time; omitted means the stationary one.
        #[arg(long)]
        c: Option<f64>,
    },
    /// Stationary inner time from the quasi-classical quadratic.
    StationaryC {
        /// Refine the quadratic root to an exact derivative zero.
        #[arg(long)]
        exact: bool,
    },
    /// Detector table over the configured screen, CSV on stdout.
    Scan,
    /// Packet amplitude that makes the screen density integrate to one.
    Normalize {
        /// Multiply every screen grid count by this factor.
        #[arg(long, default_value_t = 1.0)]
        grid_scale: f64,
    },
    /// Slow-packet report: stationary times against Newtonian drift.
    Nonrel {
        /// Arrival times, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "1000,10000")]
        t_values: Vec<f64>,
    },
    /// Cross-check the closed form against direct integration oracles.
    Verify,
}

fn emit(text: &str, path: Option<PathBuf>) -> Result<(), CliError> {
    match path {
        Some(path) => {
            if let Some(parent) = path.parent() {
                if !parent.as_os_str().is_empty() {
                    std::fs::create_dir_all(parent)?;
                }
            }
            std::fs::write(path, text)?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config_path = cli
        .config
        .ok_or_else(|| CliError::Config("--config PATH is required".into()))?;
    let mut cfg = RunConfig::load(&config_path)?;
    if let Some(hbar) = cli.hbar {
        cfg.experiment.hbar = hbar;
    }
    let (name, text, verify_failures) = match &cli.command {
        Command::Amplitude { c } => ("amplitude", commands::cmd_amplitude(&cfg, *c)?, None),
        Command::Action { c } => ("action", commands::cmd_action(&cfg, *c)?, None),
        Command::StationaryC { exact } => {
            ("stationary-c", commands::cmd_stationary_c(&cfg, *exact)?, None)
        }
        Command::Scan => ("scan", commands::cmd_scan(&cfg)?, None),
        Command::Normalize { grid_scale } => {
            ("normalize", commands::cmd_normalize(&cfg, *grid_scale)?, None)
        }
        Command::Nonrel { t_values } => ("nonrel", commands::cmd_nonrel(&cfg, t_values)?, None),
        Command::Verify => {
            let (report, failed, total) = verify::run_suite(&cfg)?;
            ("verify", report, Some((failed, total)))
        }
    };
    emit(&text, cfg.output_path(name, cli.out))?;
    match verify_failures {
        Some((failed, total)) if failed > 0 => Err(CliError::Verification { failed, total }),
        _ => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
