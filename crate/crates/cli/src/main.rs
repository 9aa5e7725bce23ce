//! `tomonoise` command-line tool: simulate detector records, run tomographic
//! estimators, and compare tomographic noise with direct detection.

mod commands;
mod config;
mod error;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Command, Flags};
use error::{CliError, EXIT_CONFIG};

/// Worker thread cap for parallel sampling and estimation.
const THREADS_ENV: &str = "TOMONOISE_THREADS";

#[derive(Parser)]
#[command(
    name = "tomonoise",
    version,
    about = "Homodyne tomography noise simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Simulate a detector record (homodyne, photocount or heterodyne)
    Simulate(Flags),
    /// Estimate an observable from a homodyne dataset
    Estimate(Flags),
    /// Compare tomographic and direct-detection noise for one state
    Compare(Flags),
    /// Tabulate noise ratios over mean photon numbers and efficiencies
    Sweep(Flags),
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = raw.trim().parse().ok().filter(|&t| t > 0).ok_or_else(|| {
        CliError::Config(format!(
            "{THREADS_ENV} must be a positive integer, got `{raw}`"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Config(e.to_string()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg
                .lines()
                .next()
                .unwrap_or("invalid arguments")
                .trim_start_matches("error: ");
            eprintln!("{}", CliError::Config(first.to_string()).report_line());
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let (command, flags) = match cli.command {
        Sub::Simulate(f) => (Command::Simulate, f),
        Sub::Estimate(f) => (Command::Estimate, f),
        Sub::Compare(f) => (Command::Compare, f),
        Sub::Sweep(f) => (Command::Sweep, f),
    };
    let result = configure_threads()
        .and_then(|_| config::resolve(command, flags))
        .and_then(|(cfg, warnings)| {
            for w in warnings {
                eprintln!("warning: {w}");
            }
            commands::run(&cfg)
        });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.report_line());
            ExitCode::from(e.code())
        }
    }
}
