//! Experiment runner behind the `redrec` binary.
//!
//! Each command reads an [`ExperimentConfig`], writes its outputs into the
//! output directory and never puts wall-clock data anywhere but `meta.json`,
//! so reruns with the same config reproduce every other file byte for byte.

mod commands;
mod config;

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::ValueEnum;
use serde_json::json;

pub use commands::{
    benchmark_samples, cmd_baseline, cmd_benchmark, cmd_replay, cmd_simulate, cmd_threshold, BenchmarkSample,
};
pub use config::{
    BaselineConfig, BenchmarkConfig, ExperimentConfig, ReplayConfig, Span, SweepConfig, SweepKind, ThresholdConfig,
    CONFIG_VERSION,
};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Closed-form success surface.
    Baseline,
    /// Monte Carlo trials, plus an optional success sweep.
    Simulate,
    /// Lossless red-rec against the assignment baseline.
    Benchmark,
    /// Rejection-threshold wait-time curve.
    Threshold,
    /// Re-execute a protocol trace.
    Replay,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Baseline => "baseline",
            Command::Simulate => "simulate",
            Command::Benchmark => "benchmark",
            Command::Threshold => "threshold",
            Command::Replay => "replay",
        }
    }
}

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<u64>,
    pub out: Option<PathBuf>,
}

/// Loads `path` (or the defaults) and applies the overrides.
pub fn resolve(path: Option<&Path>, overrides: &Overrides) -> Result<ExperimentConfig> {
    let mut config = match path {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = overrides.seed {
        config.seed = seed;
    }
    if let Some(trials) = overrides.trials {
        config.trials = trials;
    }
    if let Some(out) = &overrides.out {
        config.out = out.clone();
    }
    config.validate()?;
    Ok(config)
}

/// Runs `command` on at most `jobs` worker threads (all cores if `None`),
/// writing outputs plus `config.json` and `meta.json` to `config.out`.
pub fn run(command: Command, config: &ExperimentConfig, jobs: Option<usize>) -> Result<()> {
    config.validate()?;
    let out = &config.out;
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("config.json"), config.to_json() + "\n")?;
    let created = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let meta = json!({
        "command": command.name(),
        "package_version": env!("CARGO_PKG_VERSION"),
        "created_unix": created,
        "jobs": jobs,
        "config": config,
    });
    std::fs::write(out.join("meta.json"), serde_json::to_string_pretty(&meta)? + "\n")?;

    let dispatch = || match command {
        Command::Baseline => cmd_baseline(config, out),
        Command::Simulate => cmd_simulate(config, out),
        Command::Benchmark => cmd_benchmark(config, out),
        Command::Threshold => cmd_threshold(config, out),
        Command::Replay => cmd_replay(config, out),
    };
    match jobs {
        None => dispatch(),
        Some(0) => Err(Error::config("--jobs must be at least 1")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::config(format!("thread pool: {e}")))?
            .install(dispatch),
    }
}

/// 2 for configuration and usage errors, 3 for everything raised at run time.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Usage(_) | Error::Json(_) => 2,
        Error::Contract(_) | Error::Io(_) | Error::Csv(_) => 3,
    }
}
