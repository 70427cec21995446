#![allow(dead_code)]

use std::collections::BTreeMap;

use proptest::prelude::*;
use redrec::analytics::baseline_success;
use redrec::ops::{tally_atoms, validate_batch, Axis, ElementaryOp};
use redrec::redrec::{
    assign_open_rows, classify_columns, label_donor, pair_columns, redrec_cycle, streamlined_sequence,
};
use redrec::sim::{charge_batch_loss, corruption_by_id, run_monte_carlo, write_trials_csv, LossParams, TrialOptions};
use redrec::{ArrayState, Batch, GridSpec, Planner, TrapIndex};

// ---- double-double arithmetic ----

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

fn two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    let bb = s - a;
    Dd { hi: s, lo: (a - (s - bb)) + (b - bb) }
}

fn quick_two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    Dd { hi: s, lo: b - (s - a) }
}

fn two_prod(a: f64, b: f64) -> Dd {
    let p = a * b;
    Dd { hi: p, lo: a.mul_add(b, -p) }
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    pub fn add(self, o: Dd) -> Dd {
        let s = two_sum(self.hi, o.hi);
        let t = two_sum(self.lo, o.lo);
        let s = quick_two_sum(s.hi, s.lo + t.hi);
        quick_two_sum(s.hi, s.lo + t.lo)
    }

    pub fn mul(self, o: Dd) -> Dd {
        let p = two_prod(self.hi, o.hi);
        quick_two_sum(p.hi, p.lo + (self.hi * o.lo + self.lo * o.hi))
    }

    pub fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self.add(o.mul(Dd { hi: -q1, lo: 0.0 }));
        let q2 = r.hi / o.hi;
        let r = r.add(o.mul(Dd { hi: -q2, lo: 0.0 }));
        let q3 = r.hi / o.hi;
        quick_two_sum(q1, q2).add(Dd { hi: q3, lo: 0.0 })
    }

    pub fn from(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }
}

/// `P(X >= k)` for `X ~ Bino(n, p)` by summing every pmf term in
/// double-double. Terms come from the exact ratio recurrence outward from the
/// mode and are normalised by their own total, so no special function is
/// involved.
pub fn binomial_tail_oracle(n: u64, p: f64, k: i64) -> f64 {
    if k <= 0 {
        return 1.0;
    }
    let k = k as u64;
    if k > n {
        return 0.0;
    }
    let q = two_sum(1.0, -p);
    let r_up = Dd::from(p).div(q);
    let r_down = q.div(Dd::from(p));
    let mode = (((n + 1) as f64) * p).floor().min(n as f64) as u64;
    let tiny = 1e-320;

    let (mut total, mut tail) = (Dd::ONE, if mode >= k { Dd::ONE } else { Dd::ZERO });
    let mut term = Dd::ONE;
    let mut j = mode;
    while j < n {
        // P(j+1)/P(j) = (n-j)/(j+1) * p/q
        term = term.mul(Dd::from((n - j) as f64)).mul(r_up).div(Dd::from((j + 1) as f64));
        j += 1;
        if term.hi < tiny {
            break;
        }
        total = total.add(term);
        if j >= k {
            tail = tail.add(term);
        }
    }
    let mut term = Dd::ONE;
    let mut j = mode;
    while j > 0 {
        // P(j-1)/P(j) = j/(n-j+1) * q/p
        term = term.mul(Dd::from(j as f64)).mul(r_down).div(Dd::from((n - j + 1) as f64));
        j -= 1;
        if term.hi < tiny {
            break;
        }
        total = total.add(term);
        if j >= k {
            tail = tail.add(term);
        }
    }
    tail.div(total).hi
}

/// Relative agreement, with an absolute floor for values far below any
/// probability that matters.
pub fn close(ours: f64, oracle: f64, tol: f64) -> bool {
    (ours - oracle).abs() <= tol * oracle.abs().max(1e-280)
}

/// Random `(n, p, k)` triples concentrated around the bulk of the
/// distribution, where the tail is neither 0 nor 1 to double precision.
pub fn binomial_triples(count: usize, seed: u64) -> Vec<(u64, f64, i64)> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let n: u64 = rng.random_range(1..=40_000);
            let p: f64 = rng.random_range(0.01..0.99);
            let sd = (n as f64 * p * (1.0 - p)).sqrt();
            let z: f64 = rng.random_range(-9.0..9.0);
            let k = (n as f64 * p + z * sd).round().clamp(0.0, n as f64) as i64;
            (n, p, k)
        })
        .collect()
}

pub fn binomial_mismatches(triples: &[(u64, f64, i64)], tol: f64) -> Vec<String> {
    triples
        .iter()
        .filter_map(|&(n, p, k)| {
            let (ours, oracle) = (baseline_success(n, p, k), binomial_tail_oracle(n, p, k));
            (!close(ours, oracle, tol)).then(|| format!("n={n} p={p} k={k}: {ours:e} vs {oracle:e}"))
        })
        .collect()
}

// ---- brute force assignment ----

/// Minimum total `cost` over injections of the smaller side into the larger.
pub fn brute_assignment(a: usize, b: usize, cost: &dyn Fn(usize, usize) -> usize) -> usize {
    fn go(i: usize, rows: usize, cols: usize, used: &mut Vec<bool>, cost: &dyn Fn(usize, usize) -> usize) -> usize {
        if i == rows {
            return 0;
        }
        let mut best = usize::MAX;
        for j in 0..cols {
            if !used[j] {
                used[j] = true;
                best = best.min(cost(i, j) + go(i + 1, rows, cols, used, cost));
                used[j] = false;
            }
        }
        best
    }
    if a <= b {
        go(0, a, b, &mut vec![false; b], cost)
    } else {
        go(0, b, a, &mut vec![false; a], &|i, j| cost(j, i))
    }
}

pub fn subset(mask: u32, len: usize) -> Vec<usize> {
    (0..len).filter(|&i| mask >> i & 1 == 1).collect()
}

// ---- random states ----

/// Small grids, any target shape, each trap loaded with probability 0.6.
pub fn arb_state() -> impl Strategy<Value = ArrayState> {
    (1usize..=8, 1usize..=6, 1usize..=8)
        .prop_flat_map(|(w, th, ext)| (Just(w), 1..=w, Just(th), Just(th + ext)))
        .prop_flat_map(|(w, tw, th, h)| {
            (
                Just(GridSpec::new(w, h, tw, th).unwrap()),
                proptest::collection::vec(proptest::bool::weighted(0.6), w * h),
            )
        })
        .prop_map(|(spec, bits)| {
            let mut s = ArrayState::empty(spec);
            for (i, b) in bits.into_iter().enumerate() {
                if b {
                    s.load(spec.trap_at(i));
                }
            }
            s
        })
}

fn column_of(state: &ArrayState) -> BTreeMap<u32, TrapIndex> {
    corruption_by_id(state).into_iter().map(|(id, t, _)| (id, t)).collect()
}

// ---- invariants ----

/// Lossless planning never creates or destroys atoms and leaves the dynamic
/// layer empty; implanting onto an occupied static trap loses both atoms.
pub fn check_conservation(state: &ArrayState) -> Result<(), String> {
    for planner in [Planner::RedRec, Planner::Mwpm] {
        let seq = planner.plan(state).map_err(|e| e.to_string())?;
        let mut end = state.clone();
        let counts = seq.apply(&mut end).map_err(|e| e.to_string())?;
        if counts.annihilations != 0 || end.static_count() != state.static_count() || !end.dynamic_is_empty() {
            return Err(format!("{planner:?}: {} -> {} atoms", state.static_count(), end.static_count()));
        }
    }

    let neighbours = state.configuration().iter().find_map(|a| {
        let b = TrapIndex::new(a.col + 1, a.row);
        state.is_static_occupied(b).then_some((a, b))
    });
    if let Some((a, b)) = neighbours {
        let mut s = state.clone();
        let before = s.static_count();
        let step = redrec::ops::Direction { axis: Axis::X, sign: redrec::ops::Sign::Plus };
        let mut annihilated = 0;
        for batch in [Batch::extract([a]), Batch::step(step, [a]), Batch::implant([b])] {
            annihilated += redrec::ops::apply_batch(&mut s, &batch).map_err(|e| e.to_string())?.annihilations;
        }
        if annihilated != 1 || s.static_count() + 2 != before || s.is_static_occupied(b) || !s.dynamic_is_empty() {
            return Err(format!("implant onto {b} did not annihilate both atoms"));
        }
    }
    Ok(())
}

/// Extraction batches on random trap sets are accepted exactly when the
/// independent rule holds: non-empty, distinct, one row or one column, every
/// trap statically occupied with an empty dynamic trap above it.
pub fn check_chain_rule(state: &ArrayState, picks: &[usize]) -> Result<(), String> {
    let spec = *state.spec();
    let traps: Vec<TrapIndex> = picks.iter().map(|&i| spec.trap_at(i % spec.num_traps())).collect();
    let mut distinct = traps.clone();
    distinct.sort();
    distinct.dedup();
    let collinear = traps.iter().all(|t| t.row == traps[0].row) || traps.iter().all(|t| t.col == traps[0].col);
    let expected = !traps.is_empty()
        && distinct.len() == traps.len()
        && collinear
        && traps.iter().all(|&t| state.is_static_occupied(t) && !state.is_dynamic_occupied(t));
    let got = validate_batch(&Batch::extract(traps.iter().copied()), state);
    if got.is_ok() != expected {
        return Err(format!("traps {traps:?}: expected valid={expected}, got {got:?}"));
    }
    for planner in [Planner::RedRec, Planner::Mwpm] {
        let seq = planner.plan(state).map_err(|e| e.to_string())?;
        let mut s = state.clone();
        for (i, batch) in seq.iter().enumerate() {
            validate_batch(batch, &s).map_err(|v| format!("{planner:?} batch {i}: {v}"))?;
            redrec::ops::apply_batch(&mut s, batch).map_err(|e| e.to_string())?;
        }
    }
    Ok(())
}

/// Extractions match implantations and every atom is transferred an even
/// number of times.
pub fn check_transfer_parity(state: &ArrayState) -> Result<(), String> {
    for planner in [Planner::RedRec, Planner::Mwpm] {
        let seq = planner.plan(state).map_err(|e| e.to_string())?;
        let (mut ext, mut imp) = (0usize, 0usize);
        for batch in &seq {
            for op in batch.ops() {
                match op {
                    ElementaryOp::Extract(_) => ext += 1,
                    ElementaryOp::Implant(_) => imp += 1,
                    _ => {}
                }
            }
        }
        let (_, counts, tallies) = tally_atoms(state, &seq).map_err(|e| e.to_string())?;
        if ext != imp || counts.transfers % 2 != 0 || tallies.values().any(|t| t.transfers % 2 != 0) {
            return Err(format!("{planner:?}: {ext} extractions, {imp} implantations"));
        }
    }
    Ok(())
}

/// Charging loss batch by batch never raises an atom's corruption, keeps it
/// in (0, 1], and better survival parameters never give lower corruption.
pub fn check_corruption_monotone(state: &ArrayState, p_weak: f64, p_gain: f64) -> Result<(), String> {
    let seq = redrec_cycle(state).map_err(|e| e.to_string())?;
    let weak = LossParams { p_alpha: p_weak, p_nu: p_weak, ..LossParams::experimental() };
    let strong = LossParams { p_alpha: (p_weak + p_gain).min(1.0), p_nu: (p_weak + p_gain).min(1.0), ..weak };
    let (mut a, mut b) = (state.clone(), state.clone());
    for batch in &seq {
        let before: BTreeMap<u32, f64> = corruption_by_id(&a).into_iter().map(|(id, _, c)| (id, c)).collect();
        charge_batch_loss(&mut a, batch, &weak);
        charge_batch_loss(&mut b, batch, &strong);
        for ((id, _, ca), (_, _, cb)) in corruption_by_id(&a).into_iter().zip(corruption_by_id(&b)) {
            if !(ca > 0.0 && ca <= before[&id] && ca <= cb && cb <= 1.0) {
                return Err(format!("atom {id}: {} -> {ca} (stronger params {cb})", before[&id]));
            }
        }
        redrec::ops::apply_batch(&mut a, batch).map_err(|e| e.to_string())?;
        redrec::ops::apply_batch(&mut b, batch).map_err(|e| e.to_string())?;
    }
    Ok(())
}

/// Every horizontal step of a red-rec cycle happens outside the target rows.
pub fn check_external_rows(state: &ArrayState) -> Result<(), String> {
    let rows = state.spec().target_rows();
    let seq = redrec_cycle(state).map_err(|e| e.to_string())?;
    for batch in &seq {
        for op in batch.ops() {
            if let ElementaryOp::Step { dir, at } = *op {
                if dir.axis == Axis::X && rows.contains(&at.row) {
                    return Err(format!("horizontal step at {at} inside target rows {rows:?}"));
                }
            }
        }
    }
    Ok(())
}

/// In a streamlined sequence, each atom that changes column is extracted
/// once and implanted once. Returns how many atoms were checked.
pub fn check_streamlined_transfers(state: &ArrayState) -> Result<usize, String> {
    let ledger = classify_columns(state);
    let Some(pair) = pair_columns(&ledger).into_iter().next() else { return Ok(0) };
    let labeling = label_donor(state, pair.donor, pair.quota).map_err(|e| e.to_string())?;
    let Ok(labeling) = assign_open_rows(state, pair.receiver, labeling) else { return Ok(0) };
    let carried = labeling.assigned().len();
    if carried == 0 {
        return Ok(0);
    }
    let seq = streamlined_sequence(state, pair.receiver, &labeling).map_err(|e| e.to_string())?;
    let (end, _, tallies) = tally_atoms(state, &seq).map_err(|e| e.to_string())?;
    let (before, after) = (column_of(state), column_of(&end));
    let mut moved = 0;
    for (id, t) in &after {
        if before[id].col != t.col {
            moved += 1;
            let n = tallies[&redrec::AtomId(*id)].transfers;
            if n != 2 {
                return Err(format!("atom {id} moved column with {n} transfers"));
            }
        }
    }
    if moved != carried {
        return Err(format!("{carried} atoms labelled for redistribution, {moved} changed column"));
    }
    Ok(moved)
}

/// Two runs with the same seed write identical trial tables.
pub fn check_seed_determinism(spec: GridSpec, seed: u64, trials: u64) -> Result<(), String> {
    let run = || -> Result<Vec<u8>, String> {
        let mc =
            run_monte_carlo(spec, &LossParams::experimental(), Planner::RedRec, &TrialOptions::default(), trials, seed)
                .map_err(|e| e.to_string())?;
        let mut buf = Vec::new();
        write_trials_csv(&mut buf, &mc.records).map_err(|e| e.to_string())?;
        Ok(buf)
    };
    if run()? != run()? {
        return Err(format!("seed {seed} gave different trial tables"));
    }
    Ok(())
}
