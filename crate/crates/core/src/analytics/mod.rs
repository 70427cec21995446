//! Closed-form and Monte Carlo post-processing.

mod binomial;
mod cycles;
mod threshold;
mod transition;

pub use binomial::{baseline_success, binomial_pmf, largest_reliable_size};
pub use cycles::{cycle_statistics, CycleStatistics, RelativeOps};
pub use threshold::{threshold_optimizer, unthresholded_wait, wait_point, WaitPoint, WaitTimeCurve};
pub use transition::{isotonic, transition_curve, Crossing, LinearFit, SweepPoint, TransitionCurve};

use crate::error::Result;
use crate::lattice::GridSpec;
use crate::planner::Planner;
use crate::sim::{run_monte_carlo, LossParams, TrialOptions};

/// Monte Carlo success probability at every grid. Each grid gets its own
/// seed derived from `seed` and its position in the list.
pub fn success_sweep(
    grids: &[GridSpec],
    params: &LossParams,
    planner: Planner,
    options: &TrialOptions,
    trials: u64,
    seed: u64,
) -> Result<Vec<SweepPoint>> {
    grids
        .iter()
        .enumerate()
        .map(|(i, &spec)| {
            let mc = run_monte_carlo(spec, params, planner, options, trials, seed.wrapping_add((i as u64) << 32))?;
            Ok(SweepPoint {
                size: spec.target_size(),
                traps: spec.num_traps(),
                success: mc.summary.success_probability,
                standard_error: mc.summary.standard_error,
                trials: mc.summary.trials,
            })
        })
        .collect()
}

/// Chains of every length in `traps` for every target size in `sizes`.
pub fn chain_grids(
    sizes: impl IntoIterator<Item = usize>,
    traps: impl Fn(usize) -> Vec<usize>,
) -> Result<Vec<GridSpec>> {
    let mut grids = Vec::new();
    for n in sizes {
        for t in traps(n) {
            grids.push(GridSpec::chain(t, n)?);
        }
    }
    Ok(grids)
}
