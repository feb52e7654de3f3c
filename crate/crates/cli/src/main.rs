use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod oracle;
mod report;

use config::{IntegrateConfig, LiftConfig, NormConfig, ProfileConfig, RunConfig, SimulateConfig, SolveConfig};

/// Failure classes, mapped onto exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Exit 1: the computation itself failed.
    Numeric(String),
    /// Exit 2: unreadable, malformed or inconsistent input, or an I/O failure.
    Input(String),
    /// Exit 3: the solver stopped without meeting its tolerance.
    NotConverged(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Numeric(_) => 1,
            CliError::Input(_) => 2,
            CliError::NotConverged(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Numeric(m) | CliError::Input(m) | CliError::NotConverged(m) => f.write_str(m),
        }
    }
}

impl From<borp_core::Error> for CliError {
    fn from(e: borp_core::Error) -> Self {
        use borp_core::Error::*;
        match e {
            ChenDefect { .. } | BlowUp { .. } => CliError::Numeric(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "borp", version, about = "Besov-Orlicz rough path toolkit: simulate, lift, measure, integrate, solve")]
struct Cli {
    /// TOML config file, or a JSON report whose embedded config is replayed.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for outputs; overrides BORP_OUTPUT_DIR and the config file.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a driver path and write it as CSV.
    Simulate(SimulateConfig),
    /// Besov-Orlicz seminorm of a path CSV.
    Norm(NormConfig),
    /// Level-2 lift of a path CSV with its Chen check and rough path norm.
    Lift(LiftConfig),
    /// Rough integral of f(X) (or X itself) against the lifted driver.
    Integrate(IntegrateConfig),
    /// Solve dY = f(Y) dX by Picard iteration or the one-step scheme.
    Solve(SolveConfig),
    /// Multi-seed, multi-resolution regularity profile of Brownian paths.
    Profile(ProfileConfig),
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let out_dir = config::output_dir(cli.out_dir, file.output_dir.clone());
    match cli.command {
        Command::Simulate(c) => commands::simulate(c.resolve(file.simulate), &out_dir),
        Command::Norm(c) => commands::norm(c.resolve(file.norm), &out_dir),
        Command::Lift(c) => commands::lift(c.resolve(file.lift), &out_dir),
        Command::Integrate(c) => commands::integrate(c.resolve(file.integrate), &out_dir),
        Command::Solve(c) => commands::solve(c.resolve(file.solve), &out_dir),
        Command::Profile(c) => commands::profile(c.resolve(file.profile), &out_dir),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
