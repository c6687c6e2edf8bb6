use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod bounds;
mod experiment;
mod generate;
mod manifest;
mod solution;
mod solve;
mod validate;

/// Matrix optimisation over uncertain linear systems: generate instances, solve the
/// conic approximation, evaluate error bounds and run the experiment tables.
#[derive(Parser)]
#[command(name = "mopul", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic problem file with its ideal data and references.
    Generate(generate::Args),
    /// Solve a problem file and write the solution.
    Solve(solve::Args),
    /// Evaluate an error-bound certificate.
    Bounds(bounds::Args),
    /// Run one experiment table and write CSV and plot data.
    Experiment(experiment::Args),
    /// Re-check a solution against every constraint of its problem.
    Validate(validate::Args),
}

/// Process outcome other than an error; errors exit with [`USAGE`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Ok,
    Infeasible,
    SolverFailure,
    ValidationFailed,
}

const USAGE: u8 = 2;

impl Outcome {
    fn code(self) -> u8 {
        match self {
            Outcome::Ok => 0,
            Outcome::Infeasible => 3,
            Outcome::SolverFailure => 4,
            Outcome::ValidationFailed => 5,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(a) => generate::run(a),
        Command::Solve(a) => solve::run(a),
        Command::Bounds(a) => bounds::run(a),
        Command::Experiment(a) => experiment::run(a),
        Command::Validate(a) => validate::run(a),
    };
    match result {
        Ok(outcome) => ExitCode::from(outcome.code()),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(USAGE)
        }
    }
}
