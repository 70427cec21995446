use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Mean success probability of one (target size, trap count) pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub size: usize,
    pub traps: usize,
    pub success: f64,
    pub standard_error: f64,
    pub trials: usize,
}

/// Trap count at which the success probability reaches the level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Crossing {
    pub size: usize,
    pub traps: f64,
    /// Overhead factor `traps / size` at the crossing.
    pub eta: f64,
}

/// Ordinary least squares `y = intercept + slope * x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub intercept: f64,
    pub slope: f64,
    pub intercept_se: f64,
    pub slope_se: f64,
    pub points: usize,
}

impl LinearFit {
    pub fn fit(xs: &[f64], ys: &[f64]) -> Option<LinearFit> {
        let n = xs.len();
        if n < 2 || ys.len() != n {
            return None;
        }
        let nf = n as f64;
        let mx = xs.iter().sum::<f64>() / nf;
        let my = ys.iter().sum::<f64>() / nf;
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        if sxx == 0.0 {
            return None;
        }
        let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let slope = sxy / sxx;
        let intercept = my - slope * mx;
        let (intercept_se, slope_se) = if n > 2 {
            let ssr: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
            let s2 = ssr / (nf - 2.0);
            ((s2 * (1.0 / nf + mx * mx / sxx)).sqrt(), (s2 / sxx).sqrt())
        } else {
            (f64::NAN, f64::NAN)
        };
        Some(LinearFit { intercept, slope, intercept_se, slope_se, points: n })
    }

    pub fn at(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransitionCurve {
    pub level: f64,
    pub crossings: Vec<Crossing>,
    /// Sizes whose sweep never brackets the level.
    pub excluded: Vec<usize>,
    /// Overhead factor against target size.
    pub eta_vs_size: Option<LinearFit>,
    /// Overhead factor against the square root of the target size.
    pub eta_vs_sqrt_size: Option<LinearFit>,
}

/// Finds, for every target size, where the success probability crosses
/// `level` as the trap count grows, and fits the overhead factor at the
/// crossings.
///
/// Each size's probabilities are first made non-decreasing in the trap count
/// by isotonic regression (weights = trials), so Monte Carlo noise cannot
/// produce several crossings; the crossing is then linearly interpolated
/// between the bracketing trap counts.
pub fn transition_curve(points: &[SweepPoint], level: f64) -> TransitionCurve {
    let mut by_size: BTreeMap<usize, Vec<SweepPoint>> = BTreeMap::new();
    for p in points {
        by_size.entry(p.size).or_default().push(*p);
    }
    let mut crossings = Vec::new();
    let mut excluded = Vec::new();
    for (size, mut row) in by_size {
        row.sort_by_key(|p| p.traps);
        let weights: Vec<f64> = row.iter().map(|p| p.trials.max(1) as f64).collect();
        let smooth = isotonic(&row.iter().map(|p| p.success).collect::<Vec<_>>(), &weights);
        let hit = smooth.iter().position(|&s| s >= level);
        match hit {
            Some(i) if i > 0 => {
                let (x0, x1) = (row[i - 1].traps as f64, row[i].traps as f64);
                let (y0, y1) = (smooth[i - 1], smooth[i]);
                let traps = x0 + (level - y0) / (y1 - y0) * (x1 - x0);
                crossings.push(Crossing { size, traps, eta: traps / size as f64 });
            }
            _ => excluded.push(size),
        }
    }
    let xs: Vec<f64> = crossings.iter().map(|c| c.size as f64).collect();
    let ys: Vec<f64> = crossings.iter().map(|c| c.eta).collect();
    let sqrt_xs: Vec<f64> = xs.iter().map(|x| x.sqrt()).collect();
    TransitionCurve {
        level,
        eta_vs_size: LinearFit::fit(&xs, &ys),
        eta_vs_sqrt_size: LinearFit::fit(&sqrt_xs, &ys),
        crossings,
        excluded,
    }
}

/// Weighted pool-adjacent-violators: the closest non-decreasing sequence.
pub fn isotonic(values: &[f64], weights: &[f64]) -> Vec<f64> {
    // blocks of (mean, weight, length)
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(values.len());
    for (&v, &w) in values.iter().zip(weights) {
        blocks.push((v, w, 1));
        while blocks.len() > 1 && blocks[blocks.len() - 2].0 > blocks[blocks.len() - 1].0 {
            let (m2, w2, l2) = blocks.pop().unwrap();
            let (m1, w1, l1) = blocks.pop().unwrap();
            let w = w1 + w2;
            blocks.push(((m1 * w1 + m2 * w2) / w, w, l1 + l2));
        }
    }
    blocks.into_iter().flat_map(|(m, _, l)| std::iter::repeat_n(m, l)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(size: usize, traps: usize, success: f64) -> SweepPoint {
        SweepPoint { size, traps, success, standard_error: 0.0, trials: 100 }
    }

    #[test]
    fn step_at_twice_the_size_gives_constant_eta() {
        let mut points = Vec::new();
        for size in [8, 16, 24, 32] {
            points.push(pt(size, 2 * size - 1, 0.0));
            points.push(pt(size, 2 * size + 1, 1.0));
        }
        let curve = transition_curve(&points, 0.5);
        assert!(curve.excluded.is_empty());
        for c in &curve.crossings {
            assert!((c.eta - 2.0).abs() < 1e-12);
        }
        let fit = curve.eta_vs_size.unwrap();
        assert!(fit.slope.abs() < 1e-12 && (fit.intercept - 2.0).abs() < 1e-12);
    }

    #[test]
    fn unbracketed_sizes_are_excluded() {
        let curve = transition_curve(&[pt(4, 5, 0.7), pt(4, 6, 0.9), pt(6, 7, 0.1)], 0.5);
        assert!(curve.crossings.is_empty());
        assert_eq!(curve.excluded, vec![4, 6]);
    }

    #[test]
    fn noise_is_pooled_before_interpolating() {
        let curve = transition_curve(&[pt(10, 10, 0.2), pt(10, 11, 0.6), pt(10, 12, 0.4), pt(10, 13, 0.8)], 0.5);
        // 0.6 and 0.4 pool to 0.5, reached first at 11 traps
        assert_eq!(curve.crossings[0].traps, 11.0);
    }

    #[test]
    fn pava_matches_hand_example() {
        assert_eq!(isotonic(&[1.0, 3.0, 2.0, 4.0], &[1.0; 4]), vec![1.0, 2.5, 2.5, 4.0]);
        assert_eq!(isotonic(&[3.0, 1.0], &[1.0, 3.0]), vec![1.5, 1.5]);
    }

    #[test]
    fn ols_standard_errors() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys = [1.0, 3.1, 4.9, 7.0];
        let f = LinearFit::fit(&xs, &ys).unwrap();
        assert!((f.slope - 1.98).abs() < 1e-12);
        assert!((f.intercept - 1.03).abs() < 1e-12);
        // residuals -0.03, 0.09, -0.09, 0.03: ssr = 0.018, s2 = 0.009, sxx = 5
        assert!((f.slope_se - (0.009f64 / 5.0).sqrt()).abs() < 1e-12);
    }
}
