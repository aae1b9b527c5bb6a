use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::error;

use ruin_lab::harness::{self, ExperimentConfig, Mode, Overrides};

/// Ruin probabilities under mixed Poisson arrivals: estimates, constants and
/// asymptotic comparisons.
#[derive(Parser)]
#[command(name = "ruin-lab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate ψ and ψ_cl on the u grid.
    Simulate(RunArgs),
    /// Dump asymptotic constants and predictions.
    Asymptotics(RunArgs),
    /// Estimates against the applicable limit theorem.
    Compare(RunArgs),
    /// Convergence table of estimate/prediction ratios.
    Table(RunArgs),
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    #[arg(long, value_name = "K")]
    workers: Option<usize>,
    /// Set a config value by dotted path, e.g. `model.premium_rate=1.5`.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("RUIN_LAB_LOG", "error")).init();
    let cli = Cli::parse();
    let (mode, args) = match cli.command {
        Command::Simulate(a) => (Mode::Simulate, a),
        Command::Asymptotics(a) => (Mode::Asymptotics, a),
        Command::Compare(a) => (Mode::Compare, a),
        Command::Table(a) => (Mode::Table, a),
    };
    let overrides = Overrides {
        seed: args.seed,
        workers: args.workers,
        out_dir: args.out,
        assignments: args.overrides,
    };
    let result = ExperimentConfig::load(&args.config, mode, &overrides).and_then(|cfg| harness::run(&cfg));
    match result {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            error!("{e}");
            eprintln!("ruin-lab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
