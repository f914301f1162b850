//! `balloc`: simulate balanced-allocation processes and run the
//! verification harnesses.
//!
//! Exit codes: 0 when every check passes, 1 when a check fails, 2 on usage
//! or configuration errors.

mod commands;
mod parse;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "balloc",
    version,
    about = "Balanced allocation simulator and verifier"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and emit per-checkpoint records.
    Simulate(commands::SimulateArgs),
    /// Check the one-ball drift inequalities on a set of states.
    Drift(commands::DriftArgs),
    /// Test that the gap at a later time dominates the gap at an earlier time.
    Dominance(commands::DominanceArgs),
    /// Print a β schedule and run the black/red two-phase experiment.
    Induction(commands::InductionArgs),
    /// Growth rate of the order-d Fibonacci sequence.
    FibBase(commands::FibBaseArgs),
    /// Weight quantile M_s for a tail target 1/(s (ln ln n)^5).
    Quantile(commands::QuantileArgs),
}

pub enum Outcome {
    Pass,
    Fail,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => commands::simulate(a),
        Command::Drift(a) => commands::drift(a),
        Command::Dominance(a) => commands::dominance(a),
        Command::Induction(a) => commands::induction(a),
        Command::FibBase(a) => commands::fib_base(a),
        Command::Quantile(a) => commands::quantile(a),
    };
    match result {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
