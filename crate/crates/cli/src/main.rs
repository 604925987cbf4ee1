//! `lgwitness`: simulate, certify and study the entanglement-dimensionality
//! witness from the command line.

mod commands;
mod failure;
mod inputs;
mod settings;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use settings::Settings;

#[derive(Parser)]
#[command(
    name = "lgwitness",
    version,
    about = "Entanglement-dimensionality witness for two-photon mode states"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate coincidence counts for every measurement setting
    Simulate(Settings),
    /// Estimate the witness from a dataset and certify a dimension
    Certify(Settings),
    /// Search for the mode subset certifying the largest dimension
    Optimize(Settings),
    /// Witness under perturbed states and measurements
    Robustness(Settings),
    /// Check the bounds against the dense oracle
    Verify(Settings),
    /// Write the report and plot-data CSVs to a directory
    Report(Settings),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (run, settings): (fn(&Settings) -> failure::CliResult<()>, Settings) = match cli.command {
        Command::Simulate(s) => (commands::simulate, s),
        Command::Certify(s) => (commands::certify, s),
        Command::Optimize(s) => (commands::optimize, s),
        Command::Robustness(s) => (commands::robustness, s),
        Command::Verify(s) => (commands::verify, s),
        Command::Report(s) => (commands::report, s),
    };
    match settings.resolve().and_then(|s| run(&s)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code as u8)
        }
    }
}
