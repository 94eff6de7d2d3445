//! `cryptosplit`: search, certify, simulate and check bounds from the command line.
//!
//! Exit status: 0 on success, 1 on usage or configuration errors, 2 when a
//! verification fails, 3 when a table would exceed the memory budget.

mod hardness;
mod output;
mod pipeline;
mod search;
mod simulate;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use output::{Format, Outcome};

#[derive(Debug, Parser)]
#[command(name = "cryptosplit", version, about = "Bounds for two-player cryptogenography")]
struct Cli {
    /// Report format.
    #[arg(long, global = true, value_enum, default_value = "text")]
    format: Format,
    /// Write the report to this file and print only its headline.
    #[arg(long, global = true)]
    report: Option<PathBuf>,
    /// Per-pass progress lines on stderr.
    #[arg(long, global = true)]
    progress: bool,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "CRYPTOSPLIT_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Lower bound by iterated splitting and scaling on {0..T}^4.
    Search(search::SearchArgs),
    /// Search, extract constraints, solve the LP exactly and certify the bound.
    Pipeline(pipeline::PipelineArgs),
    /// Check a constraint set and (optionally) a claimed LP solution.
    Verify(verify::VerifyArgs),
    /// Monte Carlo play of a protocol against the optimal eavesdropper.
    Simulate(simulate::SimulateArgs),
    /// Check the concave upper-bound function.
    Hardness(hardness::HardnessArgs),
}

const EXIT_USAGE: u8 = 1;
const EXIT_FAILED: u8 = 2;
const EXIT_RESOURCE: u8 = 3;

fn run(cli: &Cli) -> anyhow::Result<Outcome> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match &cli.command {
        Command::Search(args) => search::run(args, cli.progress),
        Command::Pipeline(args) => pipeline::run(args, cli.progress),
        Command::Verify(args) => verify::run(args),
        Command::Simulate(args) => simulate::run(args),
        Command::Hardness(args) => hardness::run(args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let outcome = match run(&cli) {
        Ok(outcome) => outcome,
        Err(e) => {
            eprintln!("error: {e:#}");
            let resource = matches!(e.downcast_ref::<cryptosplit::Error>(), Some(cryptosplit::Error::ResourceLimit { .. }));
            return ExitCode::from(if resource { EXIT_RESOURCE } else { EXIT_USAGE });
        }
    };
    if let Err(e) = output::emit(&outcome, cli.format, cli.report.as_deref()) {
        eprintln!("error: {e:#}");
        return ExitCode::from(EXIT_USAGE);
    }
    if outcome.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAILED)
    }
}
