//! Drive the experiment runner from code: build a config, run a command,
//! list what it wrote.
//!
//! `cargo run --release --example experiment_config -- [out_dir]`

use std::path::PathBuf;

use redrec::cli::{run, Command, ExperimentConfig, Span, SweepConfig, SweepKind};
use redrec::GridSpec;

fn main() -> redrec::Result<()> {
    let out = std::env::args().nth(1).map_or_else(|| std::env::temp_dir().join("redrec-example"), PathBuf::from);
    let config = ExperimentConfig {
        grid: GridSpec::square(8, 16)?,
        trials: 100,
        sweep: Some(SweepConfig {
            kind: SweepKind::Chain,
            sizes: Span::new(8, 16, 8),
            min_overhead: 1.5,
            max_overhead: 2.5,
            trials: Some(50),
            level: 0.5,
        }),
        out: out.clone(),
        ..ExperimentConfig::default()
    };
    println!("{}", config.to_json());

    run(Command::Simulate, &config, None)?;
    let mut files: Vec<_> = std::fs::read_dir(&out)?.filter_map(|e| e.ok()).map(|e| e.file_name()).collect();
    files.sort();
    println!("wrote {:?} to {}", files, out.display());
    Ok(())
}
