//! Exact single-chain reconfiguration: solve, expand into batches, execute.
//!
//! `cargo run --example chain_reconfiguration`

use std::collections::BTreeSet;

use redrec::chain::{plan_to_sequence, solve_chain, ChainLine, ChainProblem};
use redrec::ops::count_ops;
use redrec::{ArrayState, GridSpec};

fn show(state: &ArrayState) -> String {
    (0..state.spec().height())
        .map(|row| if state.is_static_occupied(redrec::TrapIndex::new(0, row)) { '#' } else { '.' })
        .collect()
}

fn main() -> redrec::Result<()> {
    // 16 traps, the middle 6 form the target.
    let spec = GridSpec::chain(16, 6)?;
    let atoms = [0, 2, 3, 9, 13, 14, 15];
    let mut state = ArrayState::from_positions(spec, &atoms.map(|r| (0, r)))?;

    let targets: Vec<usize> = spec.target_rows().collect();
    let plan = solve_chain(&ChainProblem::new(spec.height(), atoms.to_vec(), targets)?);
    println!("assignment {:?}", plan.assignment);
    println!("idle {:?}, displacement cost {}", plan.idle, plan.cost());

    let seq = plan_to_sequence(&plan, ChainLine::Column(0), &BTreeSet::new());
    let counts = count_ops(&seq);
    println!("{} batches, {} transfers, {} displacements", seq.len(), counts.transfers, counts.displacements);

    println!("before {}", show(&state));
    seq.apply(&mut state)?;
    println!("after  {}", show(&state));
    assert!(state.contains_target());
    Ok(())
}
