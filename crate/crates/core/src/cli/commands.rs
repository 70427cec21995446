use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use super::config::{ExperimentConfig, SweepKind};
use crate::analytics::{
    baseline_success, cycle_statistics, largest_reliable_size, success_sweep, threshold_optimizer, transition_curve,
    unthresholded_wait, CycleStatistics, SweepPoint,
};
use crate::error::{Error, Result};
use crate::lattice::{ArrayState, GridSpec};
use crate::mwpm::mwpm_cycle;
use crate::ops::{tally_atoms, ActuationSequence, AtomTallies, OpCounts};
use crate::redrec::redrec_cycle;
use crate::sim::{
    run_monte_carlo, sample_exact, trace_trial, trial_rng, write_records_json, write_trials_csv, TrialOptions,
    TrialRecord,
};
use crate::trace::{read_trace, replay, write_trace};

type Rows = Vec<Vec<String>>;

fn write_csv(dir: &Path, name: &str, header: &[&str], rows: Rows) -> Result<()> {
    let mut w = csv::Writer::from_path(dir.join(name))?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

fn write_json(dir: &Path, name: &str, value: &impl Serialize) -> Result<()> {
    let mut f = BufWriter::new(File::create(dir.join(name))?);
    serde_json::to_writer_pretty(&mut f, value)?;
    use std::io::Write;
    writeln!(f)?;
    Ok(())
}

fn s(x: impl ToString) -> String {
    x.to_string()
}

fn opt(x: Option<impl ToString>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Closed-form success surface (`fig3a.csv`) and the largest size reaching
/// `baseline.level` for each trap count (`fig3c.csv`).
pub fn cmd_baseline(config: &ExperimentConfig, out: &Path) -> Result<()> {
    let b = &config.baseline;
    let eps = config.loss.epsilon;
    let mut rows = Vec::new();
    for traps in b.traps.values() {
        for size in b.sizes.values() {
            let p = baseline_success(traps as u64, eps, size as i64);
            rows.push(vec![s(size), s(traps), s(p)]);
        }
    }
    let points = rows.len();
    write_csv(out, "fig3a.csv", &["target_size", "traps", "success"], rows)?;

    let largest: Vec<(usize, u64)> =
        b.traps.values().map(|t| (t, largest_reliable_size(t as u64, eps, b.level))).collect();
    let rows = largest.iter().map(|&(t, n)| vec![s(t), s(n)]).collect();
    write_csv(out, "fig3c.csv", &["traps", "largest_size"], rows)?;

    write_json(
        out,
        "summary.json",
        &json!({
            "command": "baseline",
            "epsilon": eps,
            "level": b.level,
            "points": points,
            "largest_size": largest.iter().map(|&(t, n)| json!({"traps": t, "size": n})).collect::<Vec<_>>(),
        }),
    )
}

fn cycle_figures(out: &Path, stats: &CycleStatistics, prefix: &str) -> Result<()> {
    let cdf_rows = |outcome: &str, cdf: &[(usize, f64)]| -> Rows {
        cdf.iter().map(|&(c, f)| vec![s(outcome), s(c), s(f)]).collect()
    };
    let mut rows = cdf_rows("success", &stats.cycles_cdf_success);
    rows.extend(cdf_rows("failure", &stats.cycles_cdf_failure));
    write_csv(out, &format!("{prefix}b.csv"), &["outcome", "cycles", "cdf"], rows)?;

    let hist_rows = |outcome: &str, h: &[(usize, usize)]| -> Rows {
        h.iter().map(|&(n, k)| vec![s(outcome), s(n), s(k)]).collect()
    };
    let mut rows = hist_rows("success", &stats.initial_atoms_success);
    rows.extend(hist_rows("failure", &stats.initial_atoms_failure));
    write_csv(out, &format!("{prefix}c.csv"), &["outcome", "initial_atoms", "trials"], rows)
}

fn sweep_rows(points: &[SweepPoint]) -> Rows {
    points.iter().map(|p| vec![s(p.size), s(p.traps), s(p.success), s(p.standard_error), s(p.trials)]).collect()
}

/// Monte Carlo on the main grid, plus the optional success sweep.
///
/// Writes `trials.csv`, `records.json`, cycle-count CDFs (`fig4b.csv`),
/// initial-atom histograms (`fig4c.csv`) and per-cycle operation totals
/// relative to the first cycle (`fig5c.csv`). A chain sweep goes to
/// `fig4a.csv`, a square sweep to `fig5a.csv`.
pub fn cmd_simulate(config: &ExperimentConfig, out: &Path) -> Result<()> {
    let mc = run_monte_carlo(config.grid, &config.loss, config.planner, &config.options, config.trials, config.seed)?;
    write_trials_csv(File::create(out.join("trials.csv"))?, &mc.records)?;
    write_records_json(&out.join("records.json"), &mc.records)?;
    let stats = cycle_statistics(&mc.records);
    cycle_figures(out, &stats, "fig4")?;
    let rows =
        stats.relative_ops.iter().map(|r| vec![s(r.cycle), s(r.trials), s(r.transfers), s(r.displacements)]).collect();
    write_csv(out, "fig5c.csv", &["cycle", "trials", "transfers", "displacements"], rows)?;

    let sweep = match &config.sweep {
        None => None,
        Some(sw) => {
            let grids = sw.grids()?;
            let trials = sw.trials.unwrap_or(config.trials);
            let points = success_sweep(&grids, &config.loss, config.planner, &config.options, trials, config.seed)?;
            let name = match sw.kind {
                SweepKind::Chain => "fig4a.csv",
                SweepKind::Square => "fig5a.csv",
            };
            write_csv(
                out,
                name,
                &["target_size", "traps", "success", "standard_error", "trials"],
                sweep_rows(&points),
            )?;
            let curve = transition_curve(&points, sw.level);
            let rows = curve.crossings.iter().map(|c| vec![s(c.size), s(c.traps), s(c.eta)]).collect();
            write_csv(out, "transition.csv", &["target_size", "traps", "eta"], rows)?;
            Some(json!({"kind": sw.kind, "grids": grids.len(), "trials_per_grid": trials, "transition": curve}))
        }
    };

    write_json(
        out,
        "summary.json",
        &json!({
            "command": "simulate",
            "grid": config.grid,
            "planner": config.planner,
            "summary": mc.summary,
            "median_cycles_success": stats.median_cycles_success,
            "median_cycles_failure": stats.median_cycles_failure,
            "sweep": sweep,
        }),
    )
}

/// One lossless instance solved by both planners.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkSample {
    pub side: usize,
    pub sample: u64,
    pub redrec: OpCounts,
    pub mwpm: OpCounts,
    pub mwpm_relays: usize,
    /// `(transfers, displacements)` of every atom, unaddressed atoms included.
    #[serde(skip)]
    pub redrec_atoms: Vec<(u64, u64)>,
    #[serde(skip)]
    pub mwpm_atoms: Vec<(u64, u64)>,
}

impl BenchmarkSample {
    pub fn displacement_ratio(&self) -> f64 {
        ratio(self.redrec.displacements, self.mwpm.displacements)
    }

    pub fn transfer_ratio(&self) -> f64 {
        ratio(self.redrec.transfers, self.mwpm.transfers)
    }
}

fn ratio(a: u64, b: u64) -> f64 {
    if a == b {
        1.0
    } else {
        a as f64 / b as f64
    }
}

fn per_atom(atoms: usize, tallies: &AtomTallies) -> Vec<(u64, u64)> {
    let mut v: Vec<(u64, u64)> = tallies.values().map(|t| (t.transfers, t.displacements)).collect();
    v.resize(atoms.max(v.len()), (0, 0));
    v
}

fn solve_lossless(state: &ArrayState, seq: &ActuationSequence, who: &str) -> Result<(OpCounts, Vec<(u64, u64)>)> {
    let (end, counts, tallies) = tally_atoms(state, seq)?;
    if !end.contains_target() {
        return Err(Error::contract(format!("{who} left the target unfilled on a lossless instance")));
    }
    Ok((counts, per_atom(state.static_count(), &tallies)))
}

/// Runs both planners on `samples` instances with exactly as many atoms as
/// target traps.
pub fn benchmark_samples(spec: GridSpec, samples: u64, seed: u64) -> Result<Vec<BenchmarkSample>> {
    let side = spec.target_width();
    (0..samples)
        .into_par_iter()
        .map(|i| {
            let state = sample_exact(spec, spec.target_size(), &mut trial_rng(seed, i))?;
            let (redrec, redrec_atoms) = solve_lossless(&state, &redrec_cycle(&state)?, "red-rec")?;
            let routed = mwpm_cycle(&state)?;
            let (mwpm, mwpm_atoms) = solve_lossless(&state, &routed.sequence, "the assignment baseline")?;
            Ok(BenchmarkSample {
                side,
                sample: i,
                redrec,
                mwpm,
                mwpm_relays: routed.stats.relays,
                redrec_atoms,
                mwpm_atoms,
            })
        })
        .collect()
}

fn mean_se(xs: impl Iterator<Item = f64>) -> (f64, f64) {
    let v: Vec<f64> = xs.collect();
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (m, f64::NAN);
    }
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

/// Lossless red-rec against the displacement-optimal assignment baseline.
///
/// `fig2a.csv` holds per-size mean ratios, `fig2b.csv` per-instance ratios
/// and `fig2c.csv` per-instance totals for every size, and `fig2d.csv` the
/// per-atom operation histograms of the largest size.
pub fn cmd_benchmark(config: &ExperimentConfig, out: &Path) -> Result<()> {
    let b = &config.benchmark;
    let mut all = Vec::new();
    let mut per_size = Vec::new();
    for &side in &b.sides {
        let spec = GridSpec::new(side, side * b.height_factor, side, side)?;
        let samples = benchmark_samples(spec, config.trials, config.seed.wrapping_add((side as u64) << 32))?;
        let (dr, dr_se) = mean_se(samples.iter().map(BenchmarkSample::displacement_ratio));
        let (tr, tr_se) = mean_se(samples.iter().map(BenchmarkSample::transfer_ratio));
        let mean = |f: &dyn Fn(&BenchmarkSample) -> u64| {
            samples.iter().map(|x| f(x) as f64).sum::<f64>() / samples.len() as f64
        };
        per_size.push(json!({
            "side": side,
            "target_size": spec.target_size(),
            "traps": spec.num_traps(),
            "samples": samples.len(),
            "displacement_ratio": dr,
            "displacement_ratio_se": dr_se,
            "transfer_ratio": tr,
            "transfer_ratio_se": tr_se,
            "redrec_displacements": mean(&|x| x.redrec.displacements),
            "mwpm_displacements": mean(&|x| x.mwpm.displacements),
            "redrec_transfers": mean(&|x| x.redrec.transfers),
            "mwpm_transfers": mean(&|x| x.mwpm.transfers),
            "redrec_batches": mean(&|x| x.redrec.batches()),
            "mwpm_relays": mean(&|x| x.mwpm_relays as u64),
            // every instance is solved in one cycle or the run aborts
            "redrec_success_rate": 1.0,
        }));
        all.push(samples);
    }

    let f = |v: &serde_json::Value, k: &str| s(&v[k]);
    let rows = per_size
        .iter()
        .map(|v| {
            [
                "side",
                "target_size",
                "samples",
                "displacement_ratio",
                "displacement_ratio_se",
                "transfer_ratio",
                "transfer_ratio_se",
            ]
            .iter()
            .map(|k| f(v, k))
            .collect()
        })
        .collect();
    write_csv(
        out,
        "fig2a.csv",
        &[
            "side",
            "target_size",
            "samples",
            "displacement_ratio",
            "displacement_ratio_se",
            "transfer_ratio",
            "transfer_ratio_se",
        ],
        rows,
    )?;

    let flat = all.iter().flatten();
    let rows =
        flat.clone().map(|x| vec![s(x.side), s(x.sample), s(x.displacement_ratio()), s(x.transfer_ratio())]).collect();
    write_csv(out, "fig2b.csv", &["side", "sample", "displacement_ratio", "transfer_ratio"], rows)?;
    let rows = flat
        .map(|x| {
            vec![
                s(x.side),
                s(x.sample),
                s(x.redrec.transfers),
                s(x.redrec.displacements),
                s(x.mwpm.transfers),
                s(x.mwpm.displacements),
                s(x.mwpm_relays),
            ]
        })
        .collect();
    write_csv(
        out,
        "fig2c.csv",
        &[
            "side",
            "sample",
            "redrec_transfers",
            "redrec_displacements",
            "mwpm_transfers",
            "mwpm_displacements",
            "mwpm_relays",
        ],
        rows,
    )?;

    let largest = all.last().expect("at least one size");
    let mut hist: BTreeMap<(&str, &str, u64), u64> = BTreeMap::new();
    for x in largest {
        for (planner, atoms) in [("redrec", &x.redrec_atoms), ("mwpm", &x.mwpm_atoms)] {
            for &(t, d) in atoms {
                *hist.entry((planner, "transfers", t)).or_default() += 1;
                *hist.entry((planner, "displacements", d)).or_default() += 1;
            }
        }
    }
    let rows = hist.into_iter().map(|((p, q, v), n)| vec![s(p), s(q), s(v), s(n)]).collect();
    write_csv(out, "fig2d.csv", &["planner", "quantity", "per_atom", "atoms"], rows)?;

    write_json(out, "summary.json", &json!({"command": "benchmark", "sizes": per_size}))
}

/// Wait time between successes against the rejection threshold.
///
/// An unthresholded run gives the baseline wait and the outcome split by
/// initial atom count (`fig6a.csv`, `fig6b.csv`). The curve (`fig6d.csv`
/// time decomposition, `fig6e.csv` rejection and success) is estimated from
/// that run, or from a separate run floored at `threshold.floor`.
pub fn cmd_threshold(config: &ExperimentConfig, out: &Path) -> Result<()> {
    let plain = TrialOptions { threshold: None, ..config.options };
    let raw = run_monte_carlo(config.grid, &config.loss, config.planner, &plain, config.trials, config.seed)?;
    let floor = config.threshold.floor;
    let floored = if floor > 0 {
        let opts = TrialOptions { threshold: Some(floor), ..config.options };
        let trials = config.threshold.trials.unwrap_or(config.trials);
        Some(run_monte_carlo(config.grid, &config.loss, config.planner, &opts, trials, config.seed.wrapping_add(1))?)
    } else {
        None
    };
    let records: &[TrialRecord] = floored.as_ref().map_or(&raw.records, |m| &m.records);
    let curve = threshold_optimizer(records, config.grid, &config.loss, floor)?;
    write_trials_csv(File::create(out.join("trials.csv"))?, records)?;
    if floored.is_some() {
        write_trials_csv(File::create(out.join("trials_unthresholded.csv"))?, &raw.records)?;
    }

    let stats = cycle_statistics(&raw.records);
    let hist = |outcome: &str, h: &[(usize, usize)]| -> Rows {
        h.iter().map(|&(n, k)| vec![s(outcome), s(n), s(k)]).collect()
    };
    let mut rows = hist("success", &stats.initial_atoms_success);
    rows.extend(hist("failure", &stats.initial_atoms_failure));
    write_csv(out, "fig6a.csv", &["outcome", "initial_atoms", "trials"], rows)?;

    let mut by_n: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    for r in raw.records.iter().chain(floored.iter().flat_map(|m| &m.records)) {
        let e = by_n.entry(r.initial_atoms).or_default();
        e.0 += 1;
        e.1 += usize::from(r.success);
    }
    let rows = by_n.iter().map(|(&n, &(k, ok))| vec![s(n), s(k), s(ok as f64 / k as f64)]).collect();
    write_csv(out, "fig6b.csv", &["initial_atoms", "trials", "success"], rows)?;

    let rows = curve
        .points
        .iter()
        .map(|p| vec![s(p.threshold), s(p.mot_time), s(p.imaging_time), s(p.control_time), s(p.wait)])
        .collect();
    write_csv(out, "fig6d.csv", &["threshold", "mot_time", "imaging_time", "control_time", "wait"], rows)?;
    let rows = curve
        .points
        .iter()
        .map(|p| {
            vec![
                s(p.threshold),
                s(p.rejection),
                s(p.success),
                s(p.overall_success),
                s(p.images_per_success),
                s(p.kept_trials),
            ]
        })
        .collect();
    write_csv(
        out,
        "fig6e.csv",
        &["threshold", "rejection", "success", "overall_success", "images_per_success", "kept_trials"],
        rows,
    )?;

    write_json(
        out,
        "summary.json",
        &json!({
            "command": "threshold",
            "grid": config.grid,
            "unthresholded": raw.summary,
            "unthresholded_wait": unthresholded_wait(&raw.records),
            "floor": floor,
            "floored": floored.as_ref().map(|m| &m.summary),
            "optimum": curve.optimum,
            "curve_start": curve.points.first().map(|p| p.threshold),
            "skipped_thresholds": curve.skipped,
        }),
    )
}

/// Replays a protocol trace losslessly, checking every batch and that each
/// later measurement only lost atoms. Without a configured trace, trial
/// `replay.trial` of the main grid is traced to `trace.jsonl` first.
pub fn cmd_replay(config: &ExperimentConfig, out: &Path) -> Result<()> {
    let (events, record, source): (_, Option<TrialRecord>, PathBuf) = match &config.replay.trace {
        Some(path) => {
            let f = File::open(path).map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
            (read_trace(BufReader::new(f))?, None, path.clone())
        }
        None => {
            let (record, events) = trace_trial(
                config.grid,
                &config.loss,
                config.planner,
                &config.options,
                config.seed,
                config.replay.trial,
            )?;
            let path = out.join("trace.jsonl");
            write_trace(BufWriter::new(File::create(&path)?), &events)?;
            (events, Some(record), PathBuf::from("trace.jsonl"))
        }
    };
    let cycles = replay(&events)?;
    let rows = cycles
        .iter()
        .map(|c| {
            vec![
                s(c.cycle),
                s(c.batches),
                s(c.counts.transfers),
                s(c.counts.displacements),
                s(c.lossless_atoms),
                opt(c.measured_atoms),
                s(u8::from(c.consistent)),
            ]
        })
        .collect();
    write_csv(
        out,
        "replay.csv",
        &["cycle", "batches", "transfers", "displacements", "lossless_atoms", "measured_atoms", "consistent"],
        rows,
    )?;
    let consistent = cycles.iter().all(|c| c.consistent);
    write_json(
        out,
        "summary.json",
        &json!({
            "command": "replay",
            "trace": source,
            "cycles": cycles.len(),
            "consistent": consistent,
            "record": record,
        }),
    )?;
    if !consistent {
        return Err(Error::contract("a traced measurement holds atoms the lossless replay does not"));
    }
    Ok(())
}
