//! `doppel`: generate synthesized doppelganger pairs, train a toy
//! contrastive encoder, and compute dataset metrics.
//!
//! Every command that writes files also writes `manifest.json` into its
//! output directory; passing that manifest back as `--config` repeats the
//! run. Exit codes: 0 success, 2 invalid configuration, 3 I/O failure,
//! 4 numerical failure.

mod commands;
mod config;
mod manifest;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use doppel_core::{Error, ErrorKind};

use commands::{bench, gen, metrics, pairs, simcurve, train};

#[derive(Debug, Parser)]
#[command(name = "doppel", version, about = "Synthesized doppelganger pairs for contrastive audio learning")]
struct Cli {
    /// Worker threads (defaults to all cores). Outputs do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Render sounds from random parameters.
    Gen(gen::GenArgs),
    /// Render doppelganger pairs (θ+δZ₁, θ+δZ₂).
    Pairs(pairs::PairsArgs),
    /// Measure synthesis throughput.
    Bench(bench::BenchArgs),
    /// Mean pair similarity over a δ grid.
    Simcurve(simcurve::SimcurveArgs),
    /// Toy contrastive training; writes a loss trace.
    TrainToy(train::TrainArgs),
    /// Metrics over existing embeddings, probabilities or audio.
    #[command(subcommand)]
    Metrics(metrics::MetricsCommand),
}

fn exit_code(e: &Error) -> u8 {
    match e.kind() {
        ErrorKind::InvalidInput => 2,
        ErrorKind::Io => 3,
        ErrorKind::Numerical => 4,
    }
}

fn dispatch(cmd: &Command) -> doppel_core::Result<Option<std::path::PathBuf>> {
    Ok(match cmd {
        Command::Gen(a) => Some(gen::run(a)?),
        Command::Pairs(a) => Some(pairs::run(a)?),
        Command::Bench(a) => bench::run(a)?,
        Command::Simcurve(a) => Some(simcurve::run(a)?),
        Command::TrainToy(a) => Some(train::run(a)?),
        Command::Metrics(m) => Some(metrics::run(m)?),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    match dispatch(&cli.command) {
        Ok(manifest) => {
            if let Some(m) = manifest {
                eprintln!("manifest: {}", m.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
