use std::collections::BTreeMap;

use serde::Serialize;

use crate::sim::TrialRecord;

/// Per-cycle operation totals over successful trials, relative to cycle 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RelativeOps {
    pub cycle: usize,
    /// Successful trials that actuated this cycle.
    pub trials: usize,
    pub transfers: f64,
    pub displacements: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CycleStatistics {
    /// `(cycles, fraction of successful trials with at most that many)`.
    pub cycles_cdf_success: Vec<(usize, f64)>,
    pub cycles_cdf_failure: Vec<(usize, f64)>,
    pub median_cycles_success: Option<usize>,
    pub median_cycles_failure: Option<usize>,
    /// `(initial atoms, trials)` histograms.
    pub initial_atoms_success: Vec<(usize, usize)>,
    pub initial_atoms_failure: Vec<(usize, usize)>,
    pub relative_ops: Vec<RelativeOps>,
}

pub fn cycle_statistics(records: &[TrialRecord]) -> CycleStatistics {
    let (ok, failed): (Vec<&TrialRecord>, Vec<&TrialRecord>) = records.iter().partition(|r| r.success);

    let mut sums: Vec<(usize, u64, u64)> = Vec::new();
    for r in &ok {
        for (k, c) in r.per_cycle.iter().enumerate() {
            if sums.len() <= k {
                sums.push((0, 0, 0));
            }
            sums[k].0 += 1;
            sums[k].1 += c.counts.transfers;
            sums[k].2 += c.counts.displacements;
        }
    }
    let relative_ops = match sums.first().copied() {
        Some((_, t1, d1)) => sums
            .iter()
            .enumerate()
            .map(|(k, &(n, t, d))| RelativeOps {
                cycle: k + 1,
                trials: n,
                transfers: ratio(t, t1),
                displacements: ratio(d, d1),
            })
            .collect(),
        None => Vec::new(),
    };

    CycleStatistics {
        cycles_cdf_success: cdf(ok.iter().map(|r| r.cycles)),
        cycles_cdf_failure: cdf(failed.iter().map(|r| r.cycles)),
        median_cycles_success: median(ok.iter().map(|r| r.cycles)),
        median_cycles_failure: median(failed.iter().map(|r| r.cycles)),
        initial_atoms_success: histogram(ok.iter().map(|r| r.initial_atoms)),
        initial_atoms_failure: histogram(failed.iter().map(|r| r.initial_atoms)),
        relative_ops,
    }
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        if a == 0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        a as f64 / b as f64
    }
}

fn histogram(values: impl Iterator<Item = usize>) -> Vec<(usize, usize)> {
    let mut h = BTreeMap::new();
    for v in values {
        *h.entry(v).or_insert(0) += 1;
    }
    h.into_iter().collect()
}

fn cdf(values: impl Iterator<Item = usize>) -> Vec<(usize, f64)> {
    let h = histogram(values);
    let total: usize = h.iter().map(|(_, n)| n).sum();
    let mut acc = 0;
    h.into_iter()
        .map(|(v, n)| {
            acc += n;
            (v, acc as f64 / total as f64)
        })
        .collect()
}

/// Lower median.
fn median(values: impl Iterator<Item = usize>) -> Option<usize> {
    let mut v: Vec<usize> = values.collect();
    if v.is_empty() {
        return None;
    }
    v.sort_unstable();
    Some(v[(v.len() - 1) / 2])
}
