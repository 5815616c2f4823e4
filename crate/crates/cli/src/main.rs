//! `osa-ucs`: convert color files between CIEXYZ and OSA-UCS, check round
//! trips, benchmark the batch inverse and dump curve data.
//!
//! Exit status: 0 on success, 1 if some rows failed, 2 on fatal errors.

mod commands;
mod error;
mod io;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{BenchArgs, FigureArgs, JobConfig, Outcome, RoundtripArgs};

#[derive(Debug, Parser)]
#[command(name = "osa-ucs", version, about = "CIEXYZ <-> OSA-UCS Lgj conversion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Convert rows of three reals.
    Convert(JobConfig),
    /// Convert there and back and report the largest error.
    Roundtrip(RoundtripArgs),
    /// Time the batch inverse and the cubic solvers.
    Bench(BenchArgs),
    /// Sample the cubic or phi curve.
    Figure(FigureArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Convert(cfg) => commands::cmd_convert(cfg),
        Command::Roundtrip(args) => commands::cmd_roundtrip(args),
        Command::Bench(args) => commands::cmd_bench(args),
        Command::Figure(args) => commands::cmd_figure(args),
    };
    match result {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::PartialFailure) => ExitCode::from(1),
        Err(e) => {
            eprintln!("osa-ucs: {e}");
            ExitCode::from(2)
        }
    }
}
