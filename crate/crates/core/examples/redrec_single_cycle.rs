//! One red-rec cycle on a small random loading, with the column ledger that
//! drives it.
//!
//! `cargo run --example redrec_single_cycle -- [seed]`

use redrec::ops::count_ops;
use redrec::redrec::{classify_columns, pair_columns, redrec_cycle};
use redrec::sim::{sample_loading, trial_rng};
use redrec::{ArrayState, GridSpec, TrapIndex};

fn render(state: &ArrayState) {
    let spec = state.spec();
    for row in 0..spec.height() {
        let line: String = (0..spec.width())
            .map(|col| {
                let t = TrapIndex::new(col, row);
                match (state.is_static_occupied(t), spec.in_target(t)) {
                    (true, true) => '@',
                    (true, false) => 'o',
                    (false, true) => '_',
                    (false, false) => '.',
                }
            })
            .collect();
        println!("  {line}");
    }
}

fn main() -> redrec::Result<()> {
    let seed = std::env::args().nth(1).map_or(Ok(7), |s| s.parse()).expect("seed must be an integer");
    let spec = GridSpec::square(8, 18)?;
    let mut state = sample_loading(spec, 0.6, &mut trial_rng(seed, 0));
    while state.static_count() < spec.target_size() {
        state = sample_loading(spec, 0.6, &mut trial_rng(seed.wrapping_add(1), state.static_count() as u64));
    }

    println!("loaded {} atoms for a {}-site target", state.static_count(), spec.target_size());
    render(&state);

    let ledger = classify_columns(&state);
    println!("imbalance per column {:?}", ledger.imbalances());
    for pair in pair_columns(&ledger) {
        println!("  donor {} -> receiver {} ({} atoms)", pair.donor, pair.receiver, pair.quota);
    }

    let seq = redrec_cycle(&state)?;
    let counts = count_ops(&seq);
    seq.apply(&mut state)?;
    println!(
        "{} batches, {} transfers, {} displacements; target filled: {}",
        seq.len(),
        counts.transfers,
        counts.displacements,
        state.contains_target()
    );
    render(&state);
    Ok(())
}
