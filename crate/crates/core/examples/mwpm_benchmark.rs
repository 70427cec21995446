//! Lossless red-rec against the displacement-optimal assignment baseline.
//!
//! `cargo run --release --example mwpm_benchmark -- [side] [samples]`

use redrec::cli::benchmark_samples;
use redrec::mwpm::{solve_mwpm, AssignmentProblem};
use redrec::sim::{sample_exact, trial_rng};
use redrec::GridSpec;

fn main() -> redrec::Result<()> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<usize>().expect("integer argument"));
    let side = args.next().unwrap_or(16);
    let samples = args.next().unwrap_or(20) as u64;
    let spec = GridSpec::new(side, 2 * side, side, side)?;

    // The assignment on its own: minimum total Manhattan distance.
    let state = sample_exact(spec, spec.target_size(), &mut trial_rng(3, 0))?;
    let matching = solve_mwpm(&AssignmentProblem::from_state(&state));
    println!("instance 0: optimal displacement {}", matching.cost());

    let runs = benchmark_samples(spec, samples, 3)?;
    let n = runs.len() as f64;
    let mean = |f: &dyn Fn(&redrec::cli::BenchmarkSample) -> f64| runs.iter().map(f).sum::<f64>() / n;
    println!("{side}x{side} target in {side}x{}, {samples} instances", 2 * side);
    println!("  displacement ratio {:.4}", mean(&|r| r.displacement_ratio()));
    println!("  transfer ratio     {:.4}", mean(&|r| r.transfer_ratio()));
    println!("  red-rec batches    {:.1}", mean(&|r| r.redrec.batches() as f64));
    println!("  baseline relays    {:.1}", mean(&|r| r.mwpm_relays as f64));
    Ok(())
}
