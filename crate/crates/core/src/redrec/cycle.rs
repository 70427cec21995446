use std::collections::BTreeSet;

use super::{assign_open_rows, classify_columns, label_donor, pair_columns, streamlined_sequence, ColumnPair};
use crate::chain::{plan_to_sequence, solve_chain, ChainLine, ChainProblem};
use crate::error::Result;
use crate::lattice::ArrayState;
use crate::ops::ActuationSequence;

/// Solves one column as an independent chain and applies the moves to `state`.
pub fn reconfigure_column(state: &mut ArrayState, column: usize) -> Result<ActuationSequence> {
    let spec = *state.spec();
    let targets: Vec<usize> =
        if spec.desired_in_column(column) > 0 { spec.target_rows().collect() } else { Vec::new() };
    let problem = ChainProblem::new(spec.height(), state.column_rows(column), targets)?;
    let seq = plan_to_sequence(&solve_chain(&problem), ChainLine::Column(column), &BTreeSet::new());
    seq.apply(state)?;
    Ok(seq)
}

/// Plans one actuation cycle for a measured state.
///
/// Neutral columns are solved first. Pairs are then served in pairing order,
/// each with repeated streamlined sequences until its quota or its open rows
/// run out, after which the pairing is recomputed. If no listed pair moves an
/// atom, every donor/receiver pair is tried by distance; if that fails too,
/// all columns are reconfigured once and pairing restarts. Columns left
/// unsolved at the end are reconfigured on their own.
pub fn redrec_cycle(state: &ArrayState) -> Result<ActuationSequence> {
    let mut work = state.clone();
    let mut seq = ActuationSequence::new();
    let width = work.spec().width();

    for c in classify_columns(&work).columns.iter().filter(|c| c.imbalance == 0) {
        seq.append(reconfigure_column(&mut work, c.column)?);
    }

    let mut fallback_used = false;
    loop {
        let ledger = classify_columns(&work);
        if ledger.donors().next().is_none() || ledger.receivers().next().is_none() {
            break;
        }
        if serve_pairs(&mut work, &mut seq, &pair_columns(&ledger))? {
            continue;
        }
        let mut all: Vec<ColumnPair> = ledger
            .donors()
            .flat_map(|d| {
                ledger.receivers().map(move |r| ColumnPair {
                    donor: d.column,
                    receiver: r.column,
                    quota: (d.imbalance.min(-r.imbalance)) as usize,
                })
            })
            .collect();
        all.sort_by_key(|p| (p.distance(), p.donor, p.receiver));
        if serve_pairs(&mut work, &mut seq, &all)? {
            continue;
        }
        if fallback_used {
            break;
        }
        fallback_used = true;
        for col in 0..width {
            seq.append(reconfigure_column(&mut work, col)?);
        }
    }

    for col in 0..width {
        seq.append(reconfigure_column(&mut work, col)?);
    }
    Ok(seq)
}

/// Runs streamlined sequences for each pair in turn. Returns whether any atom
/// changed columns.
fn serve_pairs(work: &mut ArrayState, seq: &mut ActuationSequence, pairs: &[ColumnPair]) -> Result<bool> {
    let mut progress = false;
    for pair in pairs {
        loop {
            let ledger = classify_columns(work);
            let surplus = ledger.columns[pair.donor].imbalance;
            let deficit = -ledger.columns[pair.receiver].imbalance;
            let quota = surplus.min(deficit);
            if quota <= 0 {
                break;
            }
            let labeling = label_donor(work, pair.donor, quota as usize)?;
            let Ok(labeling) = assign_open_rows(work, pair.receiver, labeling) else { break };
            let step = streamlined_sequence(work, pair.receiver, &labeling)?;
            step.apply(work)?;
            seq.append(step);
            progress = true;
        }
    }
    Ok(progress)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{Configuration, GridSpec, TrapIndex};
    use rand::seq::index::sample;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn run(state: &ArrayState) -> ArrayState {
        let seq = redrec_cycle(state).unwrap();
        let mut end = state.clone();
        seq.apply(&mut end).unwrap();
        assert!(end.dynamic_is_empty());
        end
    }

    #[test]
    fn solved_state_needs_no_moves() {
        let spec = GridSpec::new(4, 8, 4, 4).unwrap();
        let config: Configuration = crate::lattice::target_region(&spec).into_iter().collect();
        let state = ArrayState::from_configuration(spec, &config).unwrap();
        assert!(redrec_cycle(&state).unwrap().is_empty());
    }

    #[test]
    fn donor_feeds_receiver() {
        let spec = GridSpec::new(2, 8, 2, 4).unwrap();
        let state = ArrayState::from_positions(spec, &[(0, 0), (0, 1), (0, 3), (0, 5), (0, 7), (1, 2), (1, 6), (1, 4)])
            .unwrap();
        let end = run(&state);
        assert!(end.contains_target());
        assert_eq!(end.static_count(), 8);
    }

    #[test]
    fn random_lossless_instances_complete() {
        let spec = GridSpec::new(12, 24, 12, 12).unwrap();
        for seed in 0..100 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let config: Configuration =
                sample(&mut rng, spec.num_traps(), spec.target_size()).into_iter().map(|i| spec.trap_at(i)).collect();
            let state = ArrayState::from_configuration(spec, &config).unwrap();
            assert!(run(&state).contains_target(), "seed {seed}");
        }
    }

    #[test]
    fn outer_columns_donate_to_the_block() {
        let spec = GridSpec::new(6, 10, 2, 4).unwrap();
        for seed in 0..50 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let config: Configuration =
                sample(&mut rng, spec.num_traps(), 12).into_iter().map(|i| spec.trap_at(i)).collect();
            let state = ArrayState::from_configuration(spec, &config).unwrap();
            let end = run(&state);
            assert!(end.contains_target(), "seed {seed}\n{state}");
            assert_eq!(end.static_count(), 12);
        }
    }

    #[test]
    fn single_chain() {
        let spec = GridSpec::chain(10, 4).unwrap();
        let state = ArrayState::from_positions(spec, &[(0, 0), (0, 2), (0, 8), (0, 9), (0, 1)]).unwrap();
        let end = run(&state);
        assert!(end.contains_target());
        assert!(end.is_static_occupied(TrapIndex::new(0, 0)));
    }
}
