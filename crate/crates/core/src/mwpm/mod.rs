//! Displacement-optimal baseline: minimum total Manhattan distance assignment
//! of atoms to target traps, executed as one extraction-displacement-
//! implantation (EDI) cycle per moved atom.

mod lap;
mod route;

pub use lap::solve_lap;
pub use route::{route_matching, RoutedSequence};

use serde::Serialize;

use crate::error::Result;
use crate::lattice::{target_region, ArrayState, TrapIndex};

/// Atom positions and target traps, with Manhattan distance as the cost.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssignmentProblem {
    pub sources: Vec<TrapIndex>,
    pub targets: Vec<TrapIndex>,
}

impl AssignmentProblem {
    /// Every static atom against the target block of `state`.
    pub fn from_state(state: &ArrayState) -> Self {
        AssignmentProblem { sources: state.configuration().iter().collect(), targets: target_region(state.spec()) }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Matching {
    /// `(target, source)` pairs in target order.
    pub pairs: Vec<(TrapIndex, TrapIndex)>,
    /// Targets left without an atom when sources run short.
    pub unfilled: Vec<TrapIndex>,
}

impl Matching {
    pub fn cost(&self) -> usize {
        self.pairs.iter().map(|&(t, s)| t.manhattan(s)).sum()
    }
}

/// Exact minimum-cost maximum-cardinality matching. Ties are resolved by the
/// solver's deterministic search order.
pub fn solve_mwpm(problem: &AssignmentProblem) -> Matching {
    let (src, tgt) = (&problem.sources, &problem.targets);
    let cost = |a: TrapIndex, b: TrapIndex| a.manhattan(b) as i64;
    if tgt.len() <= src.len() {
        let seed = coincident(tgt, src);
        let assigned = solve_lap(tgt.len(), src.len(), |i, j| cost(tgt[i], src[j]), &seed);
        Matching { pairs: assigned.iter().enumerate().map(|(i, &j)| (tgt[i], src[j])).collect(), unfilled: Vec::new() }
    } else {
        let seed = coincident(src, tgt);
        let assigned = solve_lap(src.len(), tgt.len(), |i, j| cost(src[i], tgt[j]), &seed);
        let mut owner = vec![None; tgt.len()];
        for (i, &j) in assigned.iter().enumerate() {
            owner[j] = Some(src[i]);
        }
        let mut m = Matching::default();
        for (j, o) in owner.into_iter().enumerate() {
            match o {
                Some(s) => m.pairs.push((tgt[j], s)),
                None => m.unfilled.push(tgt[j]),
            }
        }
        m
    }
}

/// Index pairs `(i, j)` with `rows[i] == cols[j]`.
fn coincident(rows: &[TrapIndex], cols: &[TrapIndex]) -> Vec<(usize, usize)> {
    let index: std::collections::HashMap<TrapIndex, usize> = cols.iter().enumerate().map(|(j, &t)| (t, j)).collect();
    rows.iter().enumerate().filter_map(|(i, t)| index.get(t).map(|&j| (i, j))).collect()
}

/// Plans a full cycle: match every atom against the target block, then route.
pub fn mwpm_cycle(state: &ArrayState) -> Result<RoutedSequence> {
    let matching = solve_mwpm(&AssignmentProblem::from_state(state));
    route_matching(&matching, state)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(c: usize, r: usize) -> TrapIndex {
        TrapIndex::new(c, r)
    }

    fn brute(src: &[TrapIndex], tgt: &[TrapIndex]) -> usize {
        fn go(tgt: &[TrapIndex], src: &[TrapIndex], used: &mut [bool]) -> usize {
            let Some((&x, rest)) = tgt.split_first() else { return 0 };
            let mut best = usize::MAX;
            for j in 0..src.len() {
                if !used[j] {
                    used[j] = true;
                    best = best.min(x.manhattan(src[j]) + go(rest, src, used));
                    used[j] = false;
                }
            }
            best
        }
        go(tgt, src, &mut vec![false; src.len()])
    }

    #[test]
    fn identity_costs_nothing() {
        let pts = vec![t(0, 0), t(1, 2), t(3, 1)];
        let m = solve_mwpm(&AssignmentProblem { sources: pts.clone(), targets: pts.clone() });
        assert_eq!(m.cost(), 0);
        assert!(m.pairs.iter().all(|(a, b)| a == b));
    }

    #[test]
    fn anti_diagonal_swap() {
        let p = AssignmentProblem { sources: vec![t(0, 0), t(1, 1)], targets: vec![t(0, 1), t(1, 0)] };
        let m = solve_mwpm(&p);
        assert_eq!(m.cost(), 2);
        assert_eq!(m, solve_mwpm(&p));
    }

    #[test]
    fn three_by_three_instance() {
        let p = AssignmentProblem { sources: vec![t(0, 0), t(2, 2), t(1, 0)], targets: vec![t(1, 1), t(2, 1)] };
        // (1,0) -> (1,1) and (2,2) -> (2,1)
        assert_eq!(solve_mwpm(&p).cost(), 2);
        assert_eq!(brute(&p.sources, &p.targets), 2);
    }

    #[test]
    fn deficit_matches_every_source() {
        let p = AssignmentProblem { sources: vec![t(0, 0)], targets: vec![t(0, 1), t(3, 3)] };
        let m = solve_mwpm(&p);
        assert_eq!(m.pairs, vec![(t(0, 1), t(0, 0))]);
        assert_eq!(m.unfilled, vec![t(3, 3)]);
    }
}
