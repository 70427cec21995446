//! Monte Carlo of the full measure/actuate protocol under loss.
//!
//! `cargo run --release --example lossy_monte_carlo -- [side] [height] [trials]`

use redrec::analytics::cycle_statistics;
use redrec::sim::{run_monte_carlo, LossParams, TrialOptions};
use redrec::{GridSpec, Planner};

fn main() -> redrec::Result<()> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<usize>().expect("integer argument"));
    let side = args.next().unwrap_or(16);
    let height = args.next().unwrap_or(2 * side);
    let trials = args.next().unwrap_or(300) as u64;

    let spec = GridSpec::square(side, height)?;
    let params = LossParams::experimental();
    let mc = run_monte_carlo(spec, &params, Planner::RedRec, &TrialOptions::default(), trials, 1)?;
    let s = &mc.summary;
    println!("{side}x{side} in {side}x{height}, {trials} trials");
    println!("  success {:.3} +- {:.3}", s.success_probability, s.standard_error);
    println!("  mean cycles {:.2}, mean initial atoms {:.1}", s.mean_cycles, s.mean_initial_atoms);
    if let Some(t) = s.time_per_success {
        println!("  mean time per success {t:.3} s");
    }

    let stats = cycle_statistics(&mc.records);
    println!("  median cycles: success {:?}, failure {:?}", stats.median_cycles_success, stats.median_cycles_failure);
    for r in stats.relative_ops.iter().take(5) {
        println!("  cycle {}: transfers x{:.3}, displacements x{:.3}", r.cycle, r.transfers, r.displacements);
    }
    Ok(())
}
