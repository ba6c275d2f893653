//! `qkdbound` command-line front end.

mod bounds_cmd;
mod keyrate_cmd;
mod output;
mod simulate_cmd;
mod verify_cmd;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Exit status for invalid flags or configuration.
pub const EXIT_USAGE: u8 = 2;
/// Exit status for runtime failures and oracle violations.
pub const EXIT_FAILURE: u8 = 1;

#[derive(Debug, Parser)]
#[command(name = "qkdbound", version, about = "Finite-key QKD security bounds, key-rate sweeps, BB84 simulation and oracle checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate guessing, known-plaintext, near-miss and privacy-amplification bounds.
    Bounds(bounds_cmd::Args),
    /// Sweep the finite-key secret-key rate over a QBER grid and write CSV.
    Keyrate(keyrate_cmd::Args),
    /// Run one seeded BB84 session and write its transcript.
    Simulate(simulate_cmd::Args),
    /// Run the brute-force oracle suites.
    Verify(verify_cmd::Args),
}

/// Failure split by exit status.
#[derive(Debug)]
pub enum CliError {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

impl CliError {
    pub fn usage(msg: impl std::fmt::Display) -> Self {
        CliError::Usage(anyhow::anyhow!("{msg}"))
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Runtime(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Bounds(a) => bounds_cmd::run(a),
        Command::Keyrate(a) => keyrate_cmd::run(a),
        Command::Simulate(a) => simulate_cmd::run(a),
        Command::Verify(a) => verify_cmd::run(a),
    };
    match result {
        Ok(code) => code,
        Err(CliError::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_FAILURE)
        }
    }
}
