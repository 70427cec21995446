use std::collections::BTreeSet;
use std::fmt;

use crate::chain::{chain_sequence, solve_chain, ChainLine, ChainPlan, ChainProblem};
use crate::error::{Error, Result};
use crate::lattice::{ArrayState, TrapIndex};
use crate::ops::{ActuationSequence, Batch, Direction};

/// How a donor column's atoms are used in one streamlined sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DonorLabeling {
    pub column: usize,
    /// `(row, destination row)` of atoms filling the donor's own target rows.
    pub reconfigured: Vec<(usize, usize)>,
    /// Rows of atoms picked for redistribution, in picking order.
    pub redistributed: Vec<usize>,
    /// Rows of atoms left where they are.
    pub idle: Vec<usize>,
    /// Open row assigned to each redistributed atom, parallel to `redistributed`.
    pub open_rows: Vec<Option<usize>>,
}

impl DonorLabeling {
    /// `(row, open row)` of the redistributed atoms that have a row, by row.
    pub fn assigned(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> =
            self.redistributed.iter().zip(&self.open_rows).filter_map(|(&r, o)| o.map(|o| (r, o))).collect();
        out.sort_unstable();
        out
    }
}

/// No external row offers an unobstructed path between the two columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InsufficientRows {
    pub donor: usize,
    pub receiver: usize,
}

impl fmt::Display for InsufficientRows {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "no open row between columns {} and {}", self.donor, self.receiver)
    }
}

impl std::error::Error for InsufficientRows {}

/// Splits a donor column's atoms into the chain that fills its target rows,
/// `quota` atoms to redistribute, and idle atoms.
///
/// Redistributed atoms come from outside the target block, farthest from the
/// target rows first, alternating above and below (starting above).
pub fn label_donor(state: &ArrayState, column: usize, quota: usize) -> Result<DonorLabeling> {
    let spec = state.spec();
    if column >= spec.width() {
        return Err(Error::usage(format!("column {column} out of range")));
    }
    let rows = state.column_rows(column);
    let desired = spec.desired_in_column(column);
    let surplus = rows.len().saturating_sub(desired);
    if quota > surplus {
        return Err(Error::usage(format!("quota {quota} exceeds the surplus {surplus} of column {column}")));
    }
    let band = spec.target_rows();
    let targets: Vec<usize> = if desired > 0 { band.clone().collect() } else { Vec::new() };
    let plan = solve_chain(&ChainProblem::new(spec.height(), rows, targets)?);

    let mut above: Vec<usize> = plan.idle.iter().copied().filter(|&r| r < band.start).collect();
    let mut below: Vec<usize> = plan.idle.iter().copied().filter(|&r| r >= band.end).collect();
    // atoms level with the target rows are only external in columns outside the block
    let middle: Vec<usize> =
        if desired == 0 { plan.idle.iter().copied().filter(|r| band.contains(r)).collect() } else { Vec::new() };
    // popping from the back yields the farthest remaining atom on each side
    above.reverse();

    let mut order = Vec::with_capacity(plan.idle.len());
    loop {
        let a = above.pop();
        let b = below.pop();
        if a.is_none() && b.is_none() {
            break;
        }
        order.extend(a);
        order.extend(b);
    }
    order.extend(middle);
    if order.len() < quota {
        return Err(Error::contract(format!(
            "column {column} has only {} external atoms for a quota of {quota}",
            order.len()
        )));
    }
    order.truncate(quota);
    let picked: BTreeSet<usize> = order.iter().copied().collect();
    let idle = plan.idle.iter().copied().filter(|r| !picked.contains(r)).collect();
    Ok(DonorLabeling {
        column,
        reconfigured: plan.assignment,
        open_rows: vec![None; order.len()],
        redistributed: order,
        idle,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Above,
    Below,
    Any,
}

/// Gives each redistributed atom the nearest free open row (ties toward the
/// target rows), then re-pairs atoms and rows in sorted order on each side so
/// the vertical moves in the donor column do not cross.
///
/// An open row lies outside the target rows, has every trap strictly between
/// the two columns empty in both layers, and has an empty receiver trap. When
/// the donor is a target column, atoms only use rows on their own side of the
/// target block. Atoms left without a row keep `None`.
pub fn assign_open_rows(
    state: &ArrayState,
    receiver: usize,
    mut labeling: DonorLabeling,
) -> std::result::Result<DonorLabeling, InsufficientRows> {
    let spec = state.spec();
    let donor = labeling.column;
    let band = spec.target_rows();
    let fail = InsufficientRows { donor, receiver };
    if donor == receiver || receiver >= spec.width() {
        return Err(fail);
    }
    let (lo, hi) = (donor.min(receiver), donor.max(receiver));
    let is_open = |row: usize| {
        let free = |col| {
            let t = TrapIndex::new(col, row);
            !state.is_static_occupied(t) && !state.is_dynamic_occupied(t)
        };
        !band.contains(&row) && free(receiver) && (lo + 1..hi).all(free)
    };
    let mut open: BTreeSet<usize> = (0..spec.height()).filter(|&r| is_open(r)).collect();
    if open.is_empty() {
        return Err(fail);
    }

    let in_target = spec.desired_in_column(donor) > 0;
    let side_of = |row: usize| match () {
        _ if !in_target => Side::Any,
        _ if row < band.start => Side::Above,
        _ => Side::Below,
    };
    let band_distance = |row: usize| {
        if row < band.start {
            band.start - row
        } else if row >= band.end {
            row + 1 - band.end
        } else {
            0
        }
    };

    let mut given = vec![None; labeling.redistributed.len()];
    for (i, &row) in labeling.redistributed.iter().enumerate() {
        let side = side_of(row);
        let best = open
            .iter()
            .copied()
            .filter(|&r| side == Side::Any || side_of(r) == side)
            .min_by_key(|&r| (r.abs_diff(row), band_distance(r), r));
        if let Some(r) = best {
            open.remove(&r);
            given[i] = Some(r);
        }
    }
    if given.iter().all(Option::is_none) {
        return Err(fail);
    }

    for side in [Side::Above, Side::Below, Side::Any] {
        let members: Vec<usize> =
            (0..given.len()).filter(|&i| given[i].is_some() && side_of(labeling.redistributed[i]) == side).collect();
        let mut srcs: Vec<usize> = members.iter().map(|&i| labeling.redistributed[i]).collect();
        let mut rows: Vec<usize> = members.iter().map(|&i| given[i].unwrap()).collect();
        srcs.sort_unstable();
        rows.sort_unstable();
        for (src, row) in srcs.into_iter().zip(rows) {
            let i = members.iter().copied().find(|&i| labeling.redistributed[i] == src).unwrap();
            labeling.open_rows[i] = Some(row);
        }
    }
    Ok(labeling)
}

/// Donor chain motion, horizontal carry along the open rows, then receiver
/// chain motion with the arrived atoms already in dynamic traps.
pub fn streamlined_sequence(
    state: &ArrayState,
    receiver: usize,
    labeling: &DonorLabeling,
) -> Result<ActuationSequence> {
    let spec = state.spec();
    let donor = labeling.column;
    let carried = labeling.assigned();
    if carried.is_empty() {
        return Err(Error::usage("no redistributed atom has an open row; reconfigure the column instead"));
    }
    if receiver >= spec.width() || receiver == donor {
        return Err(Error::usage(format!("invalid receiver column {receiver}")));
    }

    let mut donor_plan = ChainPlan { assignment: labeling.reconfigured.clone(), ..Default::default() };
    donor_plan.assignment.extend(carried.iter().copied());
    donor_plan.assignment.sort_unstable();
    let hold: BTreeSet<usize> = carried.iter().map(|&(src, _)| src).collect();
    let mut seq = chain_sequence(&donor_plan, ChainLine::Column(donor), &BTreeSet::new(), &hold);

    let dir = if receiver > donor { Direction::RIGHT } else { Direction::LEFT };
    let rows: Vec<usize> = carried.iter().map(|&(_, row)| row).collect();
    for k in 0..donor.abs_diff(receiver) {
        let col = if receiver > donor { donor + k } else { donor - k };
        seq.push(Batch::step(dir, rows.iter().map(|&r| TrapIndex::new(col, r))));
    }

    let mut sources: BTreeSet<usize> = state.column_rows(receiver).into_iter().collect();
    let arrived: BTreeSet<usize> = rows.iter().copied().collect();
    sources.extend(arrived.iter().copied());
    let problem = ChainProblem::new(spec.height(), sources.into_iter().collect(), spec.target_rows().collect())?;
    let plan = solve_chain(&problem);
    seq.append(chain_sequence(&plan, ChainLine::Column(receiver), &arrived, &BTreeSet::new()));
    Ok(seq)
}
