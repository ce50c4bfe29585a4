use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rayprune::harness;

#[derive(Parser)]
#[command(name = "rayprune", version, about = "Empty-space pruning benchmark for ray-marched volume rendering")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a benchmark config (or its ablation sweep).
    Run {
        /// Path to a `key = value` config file.
        #[arg(long)]
        config: PathBuf,
        /// Output directory override.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated sweep labels (F,G,H,I,J) override.
        #[arg(long)]
        sweep: Option<String>,
        /// Seed override.
        #[arg(long)]
        seed: Option<u64>,
        /// Enforce the config's check thresholds (exit 3 on violation).
        #[arg(long)]
        check: bool,
    },
    /// Compare the aggregate metrics of two report.json files.
    Compare {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run {
            config,
            out,
            sweep,
            seed,
            check,
        } => harness::cli_run(&config, out, sweep, seed, check),
        Command::Compare { a, b } => harness::cli_compare(&a, &b),
    };
    ExitCode::from(code as u8)
}
