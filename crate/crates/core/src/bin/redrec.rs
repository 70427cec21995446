use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use redrec::cli::{exit_code, resolve, run, Command, Overrides};

/// Atom-array reconfiguration experiments.
#[derive(Parser)]
#[command(version)]
struct Args {
    command: Command,
    /// JSON experiment configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base seed; trial i draws from stream i of it.
    #[arg(long)]
    seed: Option<u64>,
    /// Trials (benchmark: instances per size).
    #[arg(long)]
    trials: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let overrides = Overrides { seed: args.seed, trials: args.trials, out: args.out };
    let result = resolve(args.config.as_deref(), &overrides).and_then(|config| run(args.command, &config, args.jobs));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("redrec: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
