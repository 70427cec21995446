use serde::Serialize;

use super::binomial::baseline_success;
use crate::error::{Error, Result};
use crate::lattice::GridSpec;
use crate::sim::{LossParams, TrialRecord};

/// Mean wait between successes when loadings below `threshold` are rejected.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WaitPoint {
    pub threshold: usize,
    /// `P(N0 >= threshold)` under binomial loading.
    pub acceptance: f64,
    pub rejection: f64,
    /// Recorded trials with `N0 >= threshold`.
    pub kept_trials: usize,
    /// Success probability among accepted loadings.
    pub success: f64,
    /// Success probability per loading, accepted or not.
    pub overall_success: f64,
    /// Mean images taken per success, counting rejected loadings.
    pub images_per_success: f64,
    pub mot_time: f64,
    pub imaging_time: f64,
    pub control_time: f64,
    pub wait: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WaitTimeCurve {
    /// Estimate without rejection, straight from the records.
    pub unthresholded: Option<WaitPoint>,
    pub points: Vec<WaitPoint>,
    pub optimum: Option<WaitPoint>,
    /// Thresholds skipped because no recorded trial reaches them or none succeeds.
    pub skipped: Vec<usize>,
}

/// Wait-time estimate for rejection threshold `threshold`, reweighting the
/// recorded trials whose initial loading passes it.
///
/// The mean time to an accepted loading is `t_mot + t_image / P(N0 >= N*)`;
/// the protocol time after it (extra images plus control) is the mean over
/// kept trials; dividing by the kept success rate gives the wait between
/// successes.
pub fn wait_point(records: &[TrialRecord], spec: GridSpec, params: &LossParams, threshold: usize) -> Option<WaitPoint> {
    let kept: Vec<&TrialRecord> = records.iter().filter(|r| r.initial_atoms >= threshold).collect();
    let successes = kept.iter().filter(|r| r.success).count();
    if successes == 0 {
        return None;
    }
    let n = kept.len() as f64;
    let acceptance = baseline_success(spec.num_traps() as u64, params.epsilon, threshold as i64);
    let success = successes as f64 / n;
    let extra_images = kept.iter().map(|r| (r.images - r.loading_images) as f64).sum::<f64>() / n;
    let control = kept.iter().map(|r| r.control_time).sum::<f64>() / n;
    let images = 1.0 / acceptance + extra_images;
    Some(WaitPoint {
        threshold,
        acceptance,
        rejection: 1.0 - acceptance,
        kept_trials: kept.len(),
        success,
        overall_success: success * acceptance,
        images_per_success: images / success,
        mot_time: params.t_mot / success,
        imaging_time: images * params.t_image / success,
        control_time: control / success,
        wait: (params.t_mot + images * params.t_image + control) / success,
    })
}

/// Wait between successes with no rejection: total recorded time over
/// successes. Requires records from unthresholded loading.
pub fn unthresholded_wait(records: &[TrialRecord]) -> Option<f64> {
    let successes = records.iter().filter(|r| r.success).count();
    (successes > 0).then(|| records.iter().map(|r| r.elapsed).sum::<f64>() / successes as f64)
}

/// Evaluates every integer threshold from `max(target size, floor)` to the
/// largest recorded initial count, and picks the smallest threshold with the
/// minimum wait.
///
/// `floor` is the rejection threshold the records were generated with (0 if
/// none); thresholds below it cannot be estimated from those records.
pub fn threshold_optimizer(
    records: &[TrialRecord],
    spec: GridSpec,
    params: &LossParams,
    floor: usize,
) -> Result<WaitTimeCurve> {
    if records.is_empty() {
        return Err(Error::usage("no trial records"));
    }
    if let Some(r) = records.iter().find(|r| r.initial_atoms < floor) {
        return Err(Error::usage(format!(
            "trial {} loaded {} atoms, below the stated floor {floor}",
            r.trial, r.initial_atoms
        )));
    }
    let unthresholded = if floor == 0 { wait_point(records, spec, params, 0) } else { None };
    let start = spec.target_size().max(floor);
    let end = records.iter().map(|r| r.initial_atoms).max().unwrap_or(0);
    let mut points = Vec::new();
    let mut skipped = Vec::new();
    for n in start..=end {
        match wait_point(records, spec, params, n) {
            Some(p) => points.push(p),
            None => skipped.push(n),
        }
    }
    let optimum = points.iter().copied().fold(None, |best: Option<WaitPoint>, p| match best {
        Some(b) if b.wait <= p.wait => Some(b),
        _ => Some(p),
    });
    Ok(WaitTimeCurve { unthresholded, points, optimum, skipped })
}
