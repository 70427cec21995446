//! Elementary control operations, parallel batches and their lossless
//! semantics on an [`ArrayState`].
//!
//! A batch acts on a linear chain of traps (a sub-row or a sub-column) and is
//! either a transfer batch (extractions/implantations, duration `t_alpha`) or
//! a displacement batch (unit steps sharing one direction, duration `t_nu`).
//! Atoms not addressed by a batch sit idle for its duration; their loss is
//! charged by the simulator, not here.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{ArrayState, Atom, AtomId, GridSpec, TrapIndex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

/// Unit displacement along one lattice generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Direction {
    pub axis: Axis,
    pub sign: Sign,
}

impl Direction {
    pub const UP: Direction = Direction { axis: Axis::Y, sign: Sign::Minus };
    pub const DOWN: Direction = Direction { axis: Axis::Y, sign: Sign::Plus };
    pub const LEFT: Direction = Direction { axis: Axis::X, sign: Sign::Minus };
    pub const RIGHT: Direction = Direction { axis: Axis::X, sign: Sign::Plus };

    /// Destination of a unit step from `t`, or `None` when it leaves the grid.
    pub fn step(self, t: TrapIndex, spec: &GridSpec) -> Option<TrapIndex> {
        let (col, row) = match (self.axis, self.sign) {
            (Axis::X, Sign::Plus) => (t.col.checked_add(1)?, t.row),
            (Axis::X, Sign::Minus) => (t.col.checked_sub(1)?, t.row),
            (Axis::Y, Sign::Plus) => (t.col, t.row.checked_add(1)?),
            (Axis::Y, Sign::Minus) => (t.col, t.row.checked_sub(1)?),
        };
        let next = TrapIndex::new(col, row);
        spec.contains(next).then_some(next)
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let axis = match self.axis {
            Axis::X => 'x',
            Axis::Y => 'y',
        };
        let sign = match self.sign {
            Sign::Plus => '+',
            Sign::Minus => '-',
        };
        write!(f, "{sign}{axis}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ElementaryOp {
    /// Static trap to dynamic trap.
    Extract(TrapIndex),
    /// Dynamic trap to static trap.
    Implant(TrapIndex),
    /// Moves the dynamic trap at `at` by one lattice unit.
    Step {
        dir: Direction,
        at: TrapIndex,
    },
    NoOp,
}

impl ElementaryOp {
    pub fn trap(&self) -> Option<TrapIndex> {
        match *self {
            ElementaryOp::Extract(t) | ElementaryOp::Implant(t) => Some(t),
            ElementaryOp::Step { at, .. } => Some(at),
            ElementaryOp::NoOp => None,
        }
    }

    pub fn kind(&self) -> Option<BatchKind> {
        match self {
            ElementaryOp::Extract(_) | ElementaryOp::Implant(_) => Some(BatchKind::Transfer),
            ElementaryOp::Step { .. } => Some(BatchKind::Displacement),
            ElementaryOp::NoOp => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BatchKind {
    Transfer,
    Displacement,
}

/// Operations executed in parallel on a chain of traps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Batch {
    ops: Vec<ElementaryOp>,
}

impl Batch {
    pub fn new(ops: Vec<ElementaryOp>) -> Self {
        Batch { ops }
    }

    pub fn extract(traps: impl IntoIterator<Item = TrapIndex>) -> Self {
        Batch::new(traps.into_iter().map(ElementaryOp::Extract).collect())
    }

    pub fn implant(traps: impl IntoIterator<Item = TrapIndex>) -> Self {
        Batch::new(traps.into_iter().map(ElementaryOp::Implant).collect())
    }

    pub fn step(dir: Direction, traps: impl IntoIterator<Item = TrapIndex>) -> Self {
        Batch::new(traps.into_iter().map(|at| ElementaryOp::Step { dir, at }).collect())
    }

    pub fn ops(&self) -> &[ElementaryOp] {
        &self.ops
    }

    /// Kind of the first addressing op; `None` for an all-no-op batch.
    pub fn kind(&self) -> Option<BatchKind> {
        self.ops.iter().find_map(ElementaryOp::kind)
    }

    pub fn is_empty(&self) -> bool {
        self.ops.iter().all(|op| matches!(op, ElementaryOp::NoOp))
    }

    /// Addressed traps, in op order.
    pub fn traps(&self) -> impl Iterator<Item = TrapIndex> + '_ {
        self.ops.iter().filter_map(ElementaryOp::trap)
    }

    pub fn duration(&self, t_alpha: f64, t_nu: f64) -> f64 {
        match self.kind() {
            Some(BatchKind::Transfer) => t_alpha,
            Some(BatchKind::Displacement) => t_nu,
            None => 0.0,
        }
    }

    fn counts(&self) -> OpCounts {
        let mut counts = OpCounts::default();
        for op in &self.ops {
            match op {
                ElementaryOp::Extract(_) | ElementaryOp::Implant(_) => counts.transfers += 1,
                ElementaryOp::Step { .. } => counts.displacements += 1,
                ElementaryOp::NoOp => {}
            }
        }
        match self.kind() {
            Some(BatchKind::Transfer) => counts.transfer_batches = 1,
            Some(BatchKind::Displacement) => counts.displacement_batches = 1,
            None => {}
        }
        counts
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ViolationReason {
    EmptyBatch,
    MixedKinds,
    MixedDirections,
    DuplicateTrap,
    NotAChain,
    OutsideGrid,
    StaticEmpty,
    DynamicOccupied,
    DynamicEmpty,
    DestinationOutsideGrid,
    DynamicCollision,
}

impl fmt::Display for ViolationReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ViolationReason::EmptyBatch => "batch addresses no trap",
            ViolationReason::MixedKinds => "transfer and displacement ops mixed in one batch",
            ViolationReason::MixedDirections => "displacements do not share one direction",
            ViolationReason::DuplicateTrap => "trap addressed twice",
            ViolationReason::NotAChain => "not a sub-row or sub-column",
            ViolationReason::OutsideGrid => "trap outside grid",
            ViolationReason::StaticEmpty => "extraction from an empty static trap",
            ViolationReason::DynamicOccupied => "extraction into an occupied dynamic trap",
            ViolationReason::DynamicEmpty => "no atom in the dynamic trap",
            ViolationReason::DestinationOutsideGrid => "destination outside grid",
            ViolationReason::DynamicCollision => "destination dynamic trap holds an atom that is not moving",
        };
        f.write_str(s)
    }
}

/// First rule a batch breaks, with the offending trap when there is one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BatchViolation {
    pub trap: Option<TrapIndex>,
    pub reason: ViolationReason,
}

impl fmt::Display for BatchViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.trap {
            Some(t) => write!(f, "{} at {t}", self.reason),
            None => write!(f, "{}", self.reason),
        }
    }
}

impl std::error::Error for BatchViolation {}

fn violation(trap: Option<TrapIndex>, reason: ViolationReason) -> BatchViolation {
    BatchViolation { trap, reason }
}

/// Checks the chain constraint and each op's layer preconditions. Never
/// mutates the state.
pub fn validate_batch(batch: &Batch, state: &ArrayState) -> Result<(), BatchViolation> {
    let spec = state.spec();
    let kind = batch.kind().ok_or_else(|| violation(None, ViolationReason::EmptyBatch))?;

    let mut direction = None;
    for op in batch.ops() {
        if let Some(k) = op.kind() {
            if k != kind {
                return Err(violation(op.trap(), ViolationReason::MixedKinds));
            }
        }
        if let ElementaryOp::Step { dir, at } = *op {
            match direction {
                None => direction = Some(dir),
                Some(d) if d != dir => return Err(violation(Some(at), ViolationReason::MixedDirections)),
                Some(_) => {}
            }
        }
    }

    let mut seen = HashSet::with_capacity(batch.ops().len());
    let mut first: Option<TrapIndex> = None;
    let (mut same_row, mut same_col) = (true, true);
    for t in batch.traps() {
        if !spec.contains(t) {
            return Err(violation(Some(t), ViolationReason::OutsideGrid));
        }
        if !seen.insert(t) {
            return Err(violation(Some(t), ViolationReason::DuplicateTrap));
        }
        match first {
            None => first = Some(t),
            Some(f) => {
                same_row &= f.row == t.row;
                same_col &= f.col == t.col;
            }
        }
    }
    if !same_row && !same_col {
        return Err(violation(None, ViolationReason::NotAChain));
    }

    for op in batch.ops() {
        match *op {
            ElementaryOp::Extract(t) => {
                if !state.is_static_occupied(t) {
                    return Err(violation(Some(t), ViolationReason::StaticEmpty));
                }
                if state.is_dynamic_occupied(t) {
                    return Err(violation(Some(t), ViolationReason::DynamicOccupied));
                }
            }
            ElementaryOp::Implant(t) => {
                if !state.is_dynamic_occupied(t) {
                    return Err(violation(Some(t), ViolationReason::DynamicEmpty));
                }
            }
            ElementaryOp::Step { dir, at } => {
                if !state.is_dynamic_occupied(at) {
                    return Err(violation(Some(at), ViolationReason::DynamicEmpty));
                }
                let dest =
                    dir.step(at, spec).ok_or_else(|| violation(Some(at), ViolationReason::DestinationOutsideGrid))?;
                if state.is_dynamic_occupied(dest) && !seen.contains(&dest) {
                    return Err(violation(Some(dest), ViolationReason::DynamicCollision));
                }
            }
            ElementaryOp::NoOp => {}
        }
    }
    Ok(())
}

/// Operation totals. Transfers count extractions plus implantations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCounts {
    pub transfers: u64,
    pub displacements: u64,
    pub transfer_batches: u64,
    pub displacement_batches: u64,
    /// Implantations onto an occupied static trap (both atoms lost).
    pub annihilations: u64,
}

impl OpCounts {
    pub fn batches(&self) -> u64 {
        self.transfer_batches + self.displacement_batches
    }

    /// Control time spent executing these batches.
    pub fn control_time(&self, t_alpha: f64, t_nu: f64) -> f64 {
        self.transfer_batches as f64 * t_alpha + self.displacement_batches as f64 * t_nu
    }
}

impl Add for OpCounts {
    type Output = OpCounts;

    fn add(mut self, rhs: OpCounts) -> OpCounts {
        self += rhs;
        self
    }
}

impl AddAssign for OpCounts {
    fn add_assign(&mut self, rhs: OpCounts) {
        self.transfers += rhs.transfers;
        self.displacements += rhs.displacements;
        self.transfer_batches += rhs.transfer_batches;
        self.displacement_batches += rhs.displacement_batches;
        self.annihilations += rhs.annihilations;
    }
}

impl std::iter::Sum for OpCounts {
    fn sum<I: Iterator<Item = OpCounts>>(iter: I) -> OpCounts {
        iter.fold(OpCounts::default(), Add::add)
    }
}

/// Applies a validated batch. Extract moves static to dynamic, implant moves
/// dynamic to static (annihilating both atoms if the static trap is already
/// occupied), steps move dynamic atoms by one unit.
pub fn apply_batch(state: &mut ArrayState, batch: &Batch) -> Result<OpCounts> {
    validate_batch(batch, state).map_err(|v| Error::contract(format!("illegal batch: {v}")))?;
    Ok(transition(state, batch))
}

/// Physical semantics without precondition checks, used when atoms may have
/// vanished since the plan was made: ops on empty traps do nothing, and two
/// atoms forced into one trap are both lost.
pub fn apply_batch_lenient(state: &mut ArrayState, batch: &Batch) -> OpCounts {
    transition(state, batch)
}

fn transition(state: &mut ArrayState, batch: &Batch) -> OpCounts {
    let mut counts = batch.counts();
    let spec = *state.spec();
    let mut moving: Vec<(TrapIndex, Atom)> = Vec::new();
    for op in batch.ops() {
        match *op {
            ElementaryOp::Extract(t) => {
                if let Some(atom) = state.static_slot(t).take() {
                    let dynamic = state.dynamic_slot(t);
                    if dynamic.take().is_some() {
                        counts.annihilations += 1;
                    } else {
                        *dynamic = Some(atom);
                    }
                }
            }
            ElementaryOp::Implant(t) => {
                if let Some(atom) = state.dynamic_slot(t).take() {
                    let stat = state.static_slot(t);
                    if stat.take().is_some() {
                        counts.annihilations += 1;
                    } else {
                        *stat = Some(atom);
                    }
                }
            }
            ElementaryOp::Step { dir, at } => {
                if let Some(atom) = state.dynamic_slot(at).take() {
                    if let Some(dest) = dir.step(at, &spec) {
                        moving.push((dest, atom));
                    }
                }
            }
            ElementaryOp::NoOp => {}
        }
    }
    for (dest, atom) in moving {
        let slot = state.dynamic_slot(dest);
        if slot.take().is_some() {
            counts.annihilations += 1;
        } else {
            *slot = Some(atom);
        }
    }
    counts
}

/// The ordered batches of one actuation step.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ActuationSequence {
    batches: Vec<Batch>,
}

impl ActuationSequence {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a batch; all-no-op batches are dropped.
    pub fn push(&mut self, batch: Batch) {
        if !batch.is_empty() {
            self.batches.push(batch);
        }
    }

    pub fn append(&mut self, other: ActuationSequence) {
        self.batches.extend(other.batches);
    }

    pub fn batches(&self) -> &[Batch] {
        &self.batches
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Batch> {
        self.batches.iter()
    }

    pub fn len(&self) -> usize {
        self.batches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.batches.is_empty()
    }

    pub fn duration(&self, t_alpha: f64, t_nu: f64) -> f64 {
        self.batches.iter().map(|b| b.duration(t_alpha, t_nu)).sum()
    }

    /// Applies every batch in order, failing on the first illegal one.
    pub fn apply(&self, state: &mut ArrayState) -> Result<OpCounts> {
        self.batches.iter().map(|b| apply_batch(state, b)).sum()
    }
}

impl<'a> IntoIterator for &'a ActuationSequence {
    type Item = &'a Batch;
    type IntoIter = std::slice::Iter<'a, Batch>;

    fn into_iter(self) -> Self::IntoIter {
        self.batches.iter()
    }
}

impl FromIterator<Batch> for ActuationSequence {
    fn from_iter<I: IntoIterator<Item = Batch>>(iter: I) -> Self {
        let mut seq = ActuationSequence::new();
        for b in iter {
            seq.push(b);
        }
        seq
    }
}

/// Total operation counts of a sequence, summed over its batches.
pub fn count_ops(seq: &ActuationSequence) -> OpCounts {
    seq.iter().map(Batch::counts).sum()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AtomTally {
    pub transfers: u64,
    pub displacements: u64,
}

/// Per-atom operation tallies keyed by atom identity.
pub type AtomTallies = BTreeMap<AtomId, AtomTally>;

/// Replays `seq` from `initial`, returning the final state, the totals and
/// the per-atom tallies.
pub fn tally_atoms(initial: &ArrayState, seq: &ActuationSequence) -> Result<(ArrayState, OpCounts, AtomTallies)> {
    let mut state = initial.clone();
    let mut tallies = AtomTallies::new();
    let mut totals = OpCounts::default();
    for batch in seq {
        validate_batch(batch, &state).map_err(|v| Error::contract(format!("illegal batch: {v}")))?;
        for op in batch.ops() {
            let atom = match *op {
                ElementaryOp::Extract(t) => state.static_atom(t),
                ElementaryOp::Implant(t) | ElementaryOp::Step { at: t, .. } => state.dynamic_atom(t),
                ElementaryOp::NoOp => None,
            };
            if let Some(atom) = atom {
                let tally = tallies.entry(atom.id).or_default();
                match op.kind() {
                    Some(BatchKind::Transfer) => tally.transfers += 1,
                    Some(BatchKind::Displacement) => tally.displacements += 1,
                    None => {}
                }
            }
        }
        totals += transition(&mut state, batch);
    }
    Ok((state, totals, tallies))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> GridSpec {
        GridSpec::new(8, 8, 4, 4).unwrap()
    }

    fn t(col: usize, row: usize) -> TrapIndex {
        TrapIndex::new(col, row)
    }

    #[test]
    fn single_column_extraction_is_a_chain() {
        let state = ArrayState::from_positions(spec(), &[(5, 0), (5, 3), (5, 7)]).unwrap();
        let batch = Batch::extract([t(5, 0), t(5, 3), t(5, 7)]);
        assert_eq!(validate_batch(&batch, &state), Ok(()));
    }

    #[test]
    fn diagonal_batch_is_rejected() {
        let state = ArrayState::from_positions(spec(), &[(0, 0), (1, 1)]).unwrap();
        let err = validate_batch(&Batch::extract([t(0, 0), t(1, 1)]), &state).unwrap_err();
        assert_eq!(err.reason, ViolationReason::NotAChain);
        assert_eq!(err.to_string(), "not a sub-row or sub-column");
    }

    #[test]
    fn step_off_the_grid_is_rejected() {
        let mut state = ArrayState::from_positions(spec(), &[(7, 2)]).unwrap();
        apply_batch(&mut state, &Batch::extract([t(7, 2)])).unwrap();
        let err = validate_batch(&Batch::step(Direction::RIGHT, [t(7, 2)]), &state).unwrap_err();
        assert_eq!(err.reason, ViolationReason::DestinationOutsideGrid);
        assert_eq!(err.trap, Some(t(7, 2)));
    }

    #[test]
    fn mixed_kinds_and_directions_are_rejected() {
        let mut state = ArrayState::from_positions(spec(), &[(1, 1), (1, 2)]).unwrap();
        let mixed =
            Batch::new(vec![ElementaryOp::Extract(t(1, 1)), ElementaryOp::Step { dir: Direction::UP, at: t(1, 2) }]);
        assert_eq!(validate_batch(&mixed, &state).unwrap_err().reason, ViolationReason::MixedKinds);
        apply_batch(&mut state, &Batch::extract([t(1, 1), t(1, 2)])).unwrap();
        let dirs = Batch::new(vec![
            ElementaryOp::Step { dir: Direction::UP, at: t(1, 1) },
            ElementaryOp::Step { dir: Direction::DOWN, at: t(1, 2) },
        ]);
        assert_eq!(validate_batch(&dirs, &state).unwrap_err().reason, ViolationReason::MixedDirections);
        let empty = Batch::new(vec![ElementaryOp::NoOp]);
        assert_eq!(validate_batch(&empty, &state).unwrap_err().reason, ViolationReason::EmptyBatch);
    }

    #[test]
    fn extract_then_step_then_implant() {
        let mut state = ArrayState::from_positions(spec(), &[(3, 2)]).unwrap();
        let c = apply_batch(&mut state, &Batch::extract([t(3, 2)])).unwrap();
        assert_eq!(c.transfers, 1);
        assert!(!state.is_static_occupied(t(3, 2)));
        assert!(state.is_dynamic_occupied(t(3, 2)));

        let c = apply_batch(&mut state, &Batch::step(Direction::UP, [t(3, 2)])).unwrap();
        assert_eq!(c.displacements, 1);
        assert!(state.is_dynamic_occupied(t(3, 1)));
        assert!(!state.is_dynamic_occupied(t(3, 2)));

        apply_batch(&mut state, &Batch::implant([t(3, 1)])).unwrap();
        assert!(state.is_static_occupied(t(3, 1)));
        assert!(state.dynamic_is_empty());
    }

    #[test]
    fn implant_onto_occupied_trap_annihilates_both() {
        let mut state = ArrayState::from_positions(spec(), &[(3, 2), (3, 3)]).unwrap();
        apply_batch(&mut state, &Batch::extract([t(3, 3)])).unwrap();
        apply_batch(&mut state, &Batch::step(Direction::UP, [t(3, 3)])).unwrap();
        let c = apply_batch(&mut state, &Batch::implant([t(3, 2)])).unwrap();
        assert_eq!(c.annihilations, 1);
        assert!(!state.is_static_occupied(t(3, 2)));
        assert!(!state.is_dynamic_occupied(t(3, 2)));
        assert_eq!(state.static_count() + state.dynamic_count(), 0);
    }

    #[test]
    fn chain_of_dynamic_atoms_shifts_together() {
        let mut state = ArrayState::from_positions(spec(), &[(2, 3), (3, 3), (4, 3)]).unwrap();
        apply_batch(&mut state, &Batch::extract([t(2, 3), t(3, 3), t(4, 3)])).unwrap();
        apply_batch(&mut state, &Batch::step(Direction::RIGHT, [t(2, 3), t(3, 3), t(4, 3)])).unwrap();
        let occupied: Vec<_> = (0..8).filter(|&c| state.is_dynamic_occupied(t(c, 3))).collect();
        assert_eq!(occupied, vec![3, 4, 5]);
        // stepping only the trailing atom into its stationary neighbour is a collision
        let err = validate_batch(&Batch::step(Direction::RIGHT, [t(3, 3)]), &state).unwrap_err();
        assert_eq!(err.reason, ViolationReason::DynamicCollision);
    }

    #[test]
    fn contract_error_on_illegal_apply() {
        let mut state = ArrayState::empty(spec());
        let err = apply_batch(&mut state, &Batch::extract([t(0, 0)])).unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
    }

    #[test]
    fn lenient_apply_ignores_missing_atoms() {
        let mut state = ArrayState::empty(spec());
        let c = apply_batch_lenient(&mut state, &Batch::extract([t(0, 0)]));
        assert_eq!(c.transfers, 1);
        assert_eq!(state.static_count() + state.dynamic_count(), 0);
    }

    #[test]
    fn count_ops_of_one_edi_cycle() {
        assert_eq!(count_ops(&ActuationSequence::new()), OpCounts::default());
        let mut seq = ActuationSequence::new();
        seq.push(Batch::extract([t(1, 0)]));
        for r in 0..3 {
            seq.push(Batch::step(Direction::DOWN, [t(1, r)]));
        }
        seq.push(Batch::implant([t(1, 3)]));
        let counts = count_ops(&seq);
        assert_eq!((counts.transfers, counts.displacements), (2, 3));
        assert_eq!((counts.transfer_batches, counts.displacement_batches), (2, 3));
        assert!((seq.duration(15e-6, 67e-6) - (2.0 * 15e-6 + 3.0 * 67e-6)).abs() < 1e-18);

        let state = ArrayState::from_positions(spec(), &[(1, 0), (6, 6)]).unwrap();
        let (end, totals, tallies) = tally_atoms(&state, &seq).unwrap();
        assert_eq!(totals, counts);
        assert!(end.is_static_occupied(t(1, 3)));
        assert_eq!(tallies.len(), 1);
        assert_eq!(tallies[&AtomId(0)], AtomTally { transfers: 2, displacements: 3 });
    }
}
