//! Mean wait between successful preparations against the rejection
//! threshold on the initial atom count.
//!
//! `cargo run --release --example threshold_wait_time -- [side] [trials]`

use redrec::analytics::{threshold_optimizer, unthresholded_wait};
use redrec::sim::{run_monte_carlo, LossParams, TrialOptions};
use redrec::{GridSpec, Planner};

fn main() -> redrec::Result<()> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<usize>().expect("integer argument"));
    let side = args.next().unwrap_or(16);
    let trials = args.next().unwrap_or(1000) as u64;
    // Short arrays make loss, and so the threshold, matter.
    let spec = GridSpec::square(side, 2 * side)?;
    let params = LossParams::experimental();

    let mc = run_monte_carlo(spec, &params, Planner::RedRec, &TrialOptions::default(), trials, 5)?;
    println!("no threshold: {:.3} s between successes", unthresholded_wait(&mc.records).unwrap_or(f64::NAN));

    let curve = threshold_optimizer(&mc.records, spec, &params, 0)?;
    for p in curve.points.iter().step_by(4) {
        println!("N* {:4}: reject {:.3}, success {:.3}, wait {:.3} s", p.threshold, p.rejection, p.success, p.wait);
    }
    if let Some(best) = curve.optimum {
        println!("optimum N* = {} with {:.3} s", best.threshold, best.wait);
    }
    Ok(())
}
