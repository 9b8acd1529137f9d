//! Command-line driver: loads a smart-meter dataset, runs one experiment
//! sweep and writes plot-ready CSV/JSON plus a `manifest.json`.
//!
//! Exit codes: 0 on success, 1 when some rows failed to solve (results
//! are still written), 2 on fatal errors.

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;

use clap::Parser;

pub use commands::{execute, Outcome};
pub use config::{CostArg, Flags, Settings, Subcommand, TargetArg};

#[derive(Debug, Parser)]
#[command(name = "fedenv", version, about = "Envelope approximation experiments on smart-meter data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, clap::Subcommand)]
pub enum Command {
    /// Accuracy against communication cost on the full grid.
    Tradeoff(Flags),
    /// Envelope and true CDF curves.
    Cdf(Flags),
    /// Quantile table of the true and envelope signals.
    Quantiles(Flags),
    /// Metrics under constraint subsampling.
    Subsample(Flags),
    /// Numerical checks of the error and CDF bounds on synthetic signals.
    VerifyBounds(Flags),
    /// Writes a synthetic dataset in the ingest layout.
    Synth(Flags),
}

impl Command {
    pub fn split(&self) -> (Subcommand, &Flags) {
        match self {
            Command::Tradeoff(f) => (Subcommand::Tradeoff, f),
            Command::Cdf(f) => (Subcommand::Cdf, f),
            Command::Quantiles(f) => (Subcommand::Quantiles, f),
            Command::Subsample(f) => (Subcommand::Subsample, f),
            Command::VerifyBounds(f) => (Subcommand::VerifyBounds, f),
            Command::Synth(f) => (Subcommand::Synth, f),
        }
    }
}

/// Parses `args` (including the program name), runs and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let (sub, flags) = cli.command.split();
    let result = Settings::resolve(sub, flags).and_then(|s| execute(&s));
    match result {
        Ok(outcome) => {
            for note in &outcome.notes {
                eprintln!("note: {note}");
            }
            if outcome.row_failures > 0 {
                eprintln!("{} rows failed to solve", outcome.row_failures);
                1
            } else {
                0
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            2
        }
    }
}
