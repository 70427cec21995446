use serde::Serialize;

use super::Matching;
use crate::error::{Error, Result};
use crate::lattice::{ArrayState, TrapIndex};
use crate::ops::{ActuationSequence, Batch, Direction};

/// Single-atom EDI cycles realising a matching.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RoutedSequence {
    pub sequence: ActuationSequence,
    pub stats: RouteStats,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct RouteStats {
    /// Moves executed as a relay through blocking atoms.
    pub relays: usize,
    /// Relays where some blocker was itself waiting to move.
    pub relays_through_pending: usize,
}

/// Routes each matched atom along an L-shaped shortest path, vertical leg
/// first, falling back to the horizontal-first L.
///
/// Moves run in passes: a move is executed once its destination is empty and
/// one of its two L paths crosses no static atom. When a pass executes
/// nothing, the first move with an empty destination is relayed: the atoms
/// sitting on its vertical-first path each shift one blocker forward, last
/// segment first, so every segment is clear and the displacement total still
/// equals the move's Manhattan distance.
pub fn route_matching(matching: &Matching, state: &ArrayState) -> Result<RoutedSequence> {
    let spec = *state.spec();
    let mut work = state.clone();
    let mut out = RoutedSequence::default();
    let mut pending: Vec<(TrapIndex, TrapIndex)> = Vec::new();
    for &(dst, src) in &matching.pairs {
        if !spec.contains(src) || !spec.contains(dst) || !work.is_static_occupied(src) {
            return Err(Error::usage(format!("matched source {src} holds no atom")));
        }
        if src != dst {
            pending.push((src, dst));
        }
    }

    while !pending.is_empty() {
        let mut moved = false;
        let mut k = 0;
        while k < pending.len() {
            let (src, dst) = pending[k];
            let path = if work.is_static_occupied(dst) {
                None
            } else {
                [l_path(src, dst, true), l_path(src, dst, false)]
                    .into_iter()
                    .find(|p| p[1..].iter().all(|&t| !work.is_static_occupied(t)))
            };
            match path {
                Some(p) => {
                    edi(&mut work, &mut out.sequence, &p)?;
                    pending.swap_remove(k);
                    moved = true;
                }
                None => k += 1,
            }
        }
        if moved {
            continue;
        }

        let Some(k) = pending.iter().position(|&(_, dst)| !work.is_static_occupied(dst)) else {
            return Err(Error::contract("every pending move waits on an occupied destination"));
        };
        let (src, dst) = pending.remove(k);
        let path = l_path(src, dst, true);
        let mut stops = vec![0];
        stops.extend((1..path.len() - 1).filter(|&i| work.is_static_occupied(path[i])));
        stops.push(path.len() - 1);
        if stops[1..stops.len() - 1].iter().any(|&i| pending.iter().any(|&(s, _)| s == path[i])) {
            out.stats.relays_through_pending += 1;
        }
        for w in stops.windows(2).rev() {
            edi(&mut work, &mut out.sequence, &path[w[0]..=w[1]])?;
        }
        out.stats.relays += 1;
    }
    Ok(out)
}

/// Traps visited from `src` to `dst`, both included.
fn l_path(src: TrapIndex, dst: TrapIndex, vertical_first: bool) -> Vec<TrapIndex> {
    let mut path = vec![src];
    let mut at = src;
    let mut walk = |vertical: bool, path: &mut Vec<TrapIndex>| {
        if vertical {
            while at.row != dst.row {
                at.row = if dst.row > at.row { at.row + 1 } else { at.row - 1 };
                path.push(at);
            }
        } else {
            while at.col != dst.col {
                at.col = if dst.col > at.col { at.col + 1 } else { at.col - 1 };
                path.push(at);
            }
        }
    };
    walk(vertical_first, &mut path);
    walk(!vertical_first, &mut path);
    path
}

fn edi(state: &mut ArrayState, seq: &mut ActuationSequence, path: &[TrapIndex]) -> Result<()> {
    let mut cycle = ActuationSequence::new();
    cycle.push(Batch::extract([path[0]]));
    for w in path.windows(2) {
        let dir = match (w[1].col as isize - w[0].col as isize, w[1].row as isize - w[0].row as isize) {
            (1, 0) => Direction::RIGHT,
            (-1, 0) => Direction::LEFT,
            (0, 1) => Direction::DOWN,
            _ => Direction::UP,
        };
        cycle.push(Batch::step(dir, [w[0]]));
    }
    cycle.push(Batch::implant([path[path.len() - 1]]));
    cycle.apply(state)?;
    seq.append(cycle);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::GridSpec;
    use crate::mwpm::{solve_mwpm, AssignmentProblem};
    use crate::ops::count_ops;

    fn t(c: usize, r: usize) -> TrapIndex {
        TrapIndex::new(c, r)
    }

    #[test]
    fn single_long_move() {
        let spec = GridSpec::new(4, 4, 1, 1).unwrap();
        let state = ArrayState::from_positions(spec, &[(0, 0)]).unwrap();
        let m = Matching { pairs: vec![(t(2, 3), t(0, 0))], unfilled: vec![] };
        let r = route_matching(&m, &state).unwrap();
        let c = count_ops(&r.sequence);
        assert_eq!((c.transfers, c.displacements), (2, 5));
        // vertical leg first
        assert_eq!(r.sequence.batches()[1], Batch::step(Direction::DOWN, [t(0, 0)]));
    }

    #[test]
    fn blocked_atom_waits_for_the_blocker() {
        // (0,1) leaves sideways, then (0,0) can walk straight down
        let spec = GridSpec::new(2, 3, 1, 2).unwrap();
        let state = ArrayState::from_positions(spec, &[(0, 0), (0, 1)]).unwrap();
        let m = Matching { pairs: vec![(t(0, 2), t(0, 0)), (t(1, 1), t(0, 1))], unfilled: vec![] };
        let r = route_matching(&m, &state).unwrap();
        assert_eq!(r.stats.relays, 0);
        assert_eq!(count_ops(&r.sequence).displacements, 3);
        assert_eq!(r.sequence.batches()[0], Batch::extract([t(0, 1)]));
        let mut end = state.clone();
        r.sequence.apply(&mut end).unwrap();
        assert!(end.is_static_occupied(t(0, 2)) && end.is_static_occupied(t(1, 1)));
    }

    #[test]
    fn blocker_still_in_the_way_is_relayed() {
        // 1x4 row: the atom at 1 moves to 2, which still lies on the path 0 -> 3
        let spec = GridSpec::new(4, 1, 2, 1).unwrap();
        let state = ArrayState::from_positions(spec, &[(0, 0), (1, 0)]).unwrap();
        let m = Matching { pairs: vec![(t(3, 0), t(0, 0)), (t(2, 0), t(1, 0))], unfilled: vec![] };
        let r = route_matching(&m, &state).unwrap();
        assert_eq!(r.stats, RouteStats { relays: 1, relays_through_pending: 0 });
        assert_eq!(count_ops(&r.sequence).displacements, 4);
        let mut end = state.clone();
        r.sequence.apply(&mut end).unwrap();
        assert!(end.is_static_occupied(t(2, 0)) && end.is_static_occupied(t(3, 0)));
    }

    #[test]
    fn stayer_on_both_paths_is_relayed() {
        // (1,1) stays put and sits on both L paths from (1,0) to (1,2)
        let spec = GridSpec::new(3, 3, 1, 3).unwrap();
        let state = ArrayState::from_positions(spec, &[(1, 0), (1, 1)]).unwrap();
        let m = Matching { pairs: vec![(t(1, 1), t(1, 1)), (t(1, 2), t(1, 0))], unfilled: vec![] };
        let r = route_matching(&m, &state).unwrap();
        assert_eq!(r.stats, RouteStats { relays: 1, relays_through_pending: 0 });
        let c = count_ops(&r.sequence);
        assert_eq!(c.displacements, 2);
        assert_eq!(c.transfers, 4);
    }

    #[test]
    fn displacements_equal_matching_cost() {
        let spec = GridSpec::new(6, 6, 4, 4).unwrap();
        let state = ArrayState::from_positions(
            spec,
            &[
                (0, 0),
                (5, 5),
                (0, 5),
                (5, 0),
                (2, 2),
                (3, 3),
                (1, 3),
                (4, 1),
                (2, 0),
                (3, 5),
                (0, 2),
                (5, 3),
                (1, 1),
                (4, 4),
                (2, 4),
                (3, 1),
            ],
        )
        .unwrap();
        let m = solve_mwpm(&AssignmentProblem::from_state(&state));
        let r = route_matching(&m, &state).unwrap();
        assert_eq!(count_ops(&r.sequence).displacements as usize, m.cost());
        let mut end = state.clone();
        r.sequence.apply(&mut end).unwrap();
        assert!(end.contains_target());
    }
}
