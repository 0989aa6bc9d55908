//! Command-line front end for sparse CP decomposition: solver runs,
//! single-subproblem sketch benchmarking, synthetic data generation, and
//! model scoring.

mod commands;
mod manifest;

use clap::{Parser, Subcommand};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "cparls", version, about = "CP decomposition of sparse tensors by randomized leverage-score sketching")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a CP decomposition and write model, trace, and manifest files
    Decompose(commands::DecomposeArgs),
    /// Benchmark sketched least-squares plans for one mode of a frozen model
    SampleBench(commands::SampleBenchArgs),
    /// Generate a synthetic tensor with concentrated-leverage factors
    Synth(commands::SynthArgs),
    /// Evaluate fit (and factor match score) of a model against a tensor
    Score(commands::ScoreArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // help/version requests are not errors
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.cmd {
        Command::Decompose(args) => commands::cmd_decompose(args),
        Command::SampleBench(args) => commands::cmd_sample_bench(args),
        Command::Synth(args) => commands::cmd_synth(args),
        Command::Score(args) => commands::cmd_score(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e);
            ExitCode::from(e.exit_code())
        }
    }
}
