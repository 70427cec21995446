mod common;

use common::*;
use proptest::prelude::*;
use redrec::GridSpec;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn planners_conserve_atoms(state in arb_state()) {
        check_conservation(&state).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn batches_obey_the_chain_rule(state in arb_state(), picks in proptest::collection::vec(0usize..1000, 0..5)) {
        check_chain_rule(&state, &picks).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn transfers_come_in_pairs(state in arb_state()) {
        check_transfer_parity(&state).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn corruption_only_decreases(state in arb_state(), p in 0.5f64..1.0, gain in 0.0f64..0.5) {
        check_corruption_monotone(&state, p, gain).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn redistribution_uses_external_rows(state in arb_state()) {
        check_external_rows(&state).map_err(TestCaseError::fail)?;
    }

}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn redistributed_atoms_transfer_twice(state in arb_state()) {
        check_streamlined_transfers(&state).map_err(TestCaseError::fail)?;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn same_seed_same_trials(seed in any::<u64>(), side in 2usize..6) {
        check_seed_determinism(GridSpec::square(side, 2 * side).unwrap(), seed, 20).map_err(TestCaseError::fail)?;
    }
}

#[test]
fn streamlined_check_is_not_vacuous() {
    use proptest::strategy::ValueTree;
    use proptest::test_runner::TestRunner;
    let mut runner = TestRunner::deterministic();
    let strategy = arb_state();
    let mut moved = 0;
    for _ in 0..200 {
        let state = strategy.new_tree(&mut runner).unwrap().current();
        moved += check_streamlined_transfers(&state).unwrap();
    }
    assert!(moved >= 20, "only {moved} redistributed atoms checked");
}
