//! Batch front-end for segmentation benchmark evaluation: metric runs,
//! rankings, bootstrap stability and analysis reports over a directory
//! dataset.
//!
//! Exit codes: 0 success, 1 usage error, 2 partial failure (some cases
//! could not be evaluated), 3 fatal I/O error.

mod commands;
mod config;
mod dataset;
mod table_io;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

/// A command either finishes with an exit code (0 or 2) or fails.
pub enum Failure {
    /// Bad arguments, unknown modes, invalid configuration.
    Usage(anyhow::Error),
    /// Required files or directories cannot be read or written.
    Fatal(anyhow::Error),
}

pub type CmdResult = std::result::Result<u8, Failure>;

pub fn usage<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Usage(e.into())
}

pub fn fatal<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Fatal(e.into())
}

#[derive(Parser)]
#[command(
    name = "segbench",
    version,
    about = "Evaluation, ranking and rank-stability toolkit for instrument segmentation benchmarks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate team predictions against references into a metrics CSV
    Evaluate(commands::evaluate::EvaluateArgs),
    /// Compute a leaderboard from a metrics CSV
    Rank(commands::rank::RankArgs),
    /// Bootstrap ranking-stability analysis
    Bootstrap(commands::bootstrap::BootstrapArgs),
    /// Stratified, worst-case and cross-stage reports
    Report(commands::report::ReportArgs),
    /// Debug a single reference/prediction mask pair
    Match(commands::match_case::MatchArgs),
    /// Derive the NSD tolerance from multi-annotator masks
    Tau(commands::tau::TauArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Evaluate(args) => commands::evaluate::run(args),
        Command::Rank(args) => commands::rank::run(args),
        Command::Bootstrap(args) => commands::bootstrap::run(args),
        Command::Report(args) => commands::report::run(args),
        Command::Match(args) => commands::match_case::run(args),
        Command::Tau(args) => commands::tau::run(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Usage(e)) => {
            eprintln!("usage error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Fatal(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}
