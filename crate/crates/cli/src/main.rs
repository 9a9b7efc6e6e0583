//! `errcons`: error-consistency analysis from the command line.

mod analyze;
mod bounds;
mod simulate;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Exit status contract.
pub mod exit {
    pub const OK: u8 = 0;
    pub const USAGE: u8 = 1;
    pub const DATA: u8 = 2;
    pub const INTERNAL: u8 = 3;
}

#[derive(Debug, Parser)]
#[command(name = "errcons", version, about = "Trial-by-trial error consistency between decision makers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute pairwise consistency, group summaries and accuracies from response files.
    Analyze(analyze::AnalyzeArgs),
    /// Simulate independent observers and write a percentile table.
    Simulate(simulate::SimulateArgs),
    /// Print feasibility bounds of c_obs and kappa.
    Bounds(bounds::BoundsArgs),
}

/// Maps an error chain onto the exit-code contract.
fn exit_code_for(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<errcons_core::Error>() {
            return if e.is_internal() { exit::INTERNAL } else { exit::DATA };
        }
    }
    exit::DATA
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(raw) = std::env::var("ERRCONS_THREADS") {
        let threads: usize = match raw.trim() {
            "max" | "" => 0,
            v => v
                .parse()
                .map_err(|_| anyhow::anyhow!("ERRCONS_THREADS must be a positive integer or `max`, got `{v}`"))?,
        };
        rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::USAGE } else { exit::OK });
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(exit::USAGE);
    }
    let result = match cli.command {
        Command::Analyze(args) => analyze::run(args),
        Command::Simulate(args) => simulate::run(args),
        Command::Bounds(args) => bounds::run(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
