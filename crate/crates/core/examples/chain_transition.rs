//! Where lossy chains cross 50% success, and how the required overhead
//! factor grows with chain length.
//!
//! `cargo run --release --example chain_transition -- [trials]`

use redrec::analytics::{chain_grids, success_sweep, transition_curve};
use redrec::sim::{LossParams, TrialOptions};
use redrec::Planner;

fn main() -> redrec::Result<()> {
    let trials = std::env::args().nth(1).map_or(200, |a| a.parse().expect("integer trials"));
    let grids = chain_grids((8..=32).step_by(8), |n| (n * 13 / 10..=n * 5 / 2 + 4).collect())?;
    let points =
        success_sweep(&grids, &LossParams::experimental(), Planner::RedRec, &TrialOptions::default(), trials, 1)?;
    let curve = transition_curve(&points, 0.5);
    for c in &curve.crossings {
        println!("{:3} atoms: 50% at {:.1} traps (eta {:.3})", c.size, c.traps, c.eta);
    }
    if let Some(fit) = curve.eta_vs_size {
        println!("eta = {:.3} + {:.4} N", fit.intercept, fit.slope);
    }
    Ok(())
}
