//! Exact reconfiguration of a single chain of traps.
//!
//! On a line the minimum-displacement assignment between sorted sources and
//! sorted targets is order preserving, so an alignment DP over the two sorted
//! lists finds it in `O(|sources|·|targets|)`. All moves then fit in one
//! extraction batch, two directional groups of step batches and one
//! implantation batch.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::lattice::TrapIndex;
use crate::ops::{ActuationSequence, Axis, Batch, Direction, Sign};

/// Sorted atom positions and target positions on a chain of `length` traps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainProblem {
    length: usize,
    sources: Vec<usize>,
    targets: Vec<usize>,
}

impl ChainProblem {
    pub fn new(length: usize, sources: Vec<usize>, targets: Vec<usize>) -> Result<Self> {
        for (name, list) in [("sources", &sources), ("targets", &targets)] {
            if list.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::usage(format!("{name} must be strictly increasing")));
            }
            if list.last().is_some_and(|&p| p >= length) {
                return Err(Error::usage(format!("{name} exceed chain length {length}")));
            }
        }
        Ok(ChainProblem { length, sources, targets })
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn sources(&self) -> &[usize] {
        &self.sources
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }
}

/// Order-preserving assignment of sources to targets.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ChainPlan {
    /// `(source, destination)` pairs, increasing in both coordinates.
    pub assignment: Vec<(usize, usize)>,
    /// Sources left where they are.
    pub idle: Vec<usize>,
    /// Targets no source was assigned to (deficit case).
    pub unfilled: Vec<usize>,
}

impl ChainPlan {
    pub fn cost(&self) -> usize {
        self.assignment.iter().map(|&(s, d)| s.abs_diff(d)).sum()
    }

    /// Pairs with `source != destination`.
    pub fn moving(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.assignment.iter().copied().filter(|&(s, d)| s != d)
    }
}

/// Minimum-displacement maximum-cardinality matching on a chain.
///
/// With more sources than targets the leftover sources go idle; ties prefer
/// matching the leftmost sources. With fewer sources the leftover targets are
/// reported as unfilled, ties preferring the leftmost targets.
pub fn solve_chain(problem: &ChainProblem) -> ChainPlan {
    let (src, tgt) = (&problem.sources, &problem.targets);
    if src.len() >= tgt.len() {
        let picked = align(src, tgt);
        let mut plan = ChainPlan::default();
        let mut next = 0;
        for (i, &s) in src.iter().enumerate() {
            if picked.get(next) == Some(&i) {
                plan.assignment.push((s, tgt[next]));
                next += 1;
            } else {
                plan.idle.push(s);
            }
        }
        plan
    } else {
        let picked = align(tgt, src);
        let mut plan = ChainPlan::default();
        let mut next = 0;
        for (j, &t) in tgt.iter().enumerate() {
            if picked.get(next) == Some(&j) {
                plan.assignment.push((src[next], t));
                next += 1;
            } else {
                plan.unfilled.push(t);
            }
        }
        plan
    }
}

/// Chooses which elements of `long` are matched, in order, to every element
/// of `short` at minimum total distance. Returns indices into `long`.
fn align(long: &[usize], short: &[usize]) -> Vec<usize> {
    let (n, m) = (long.len(), short.len());
    if m == 0 {
        return Vec::new();
    }
    const INF: u64 = u64::MAX / 2;
    let w = m + 1;
    // dp[i*w + j]: best cost matching short[..j] into long[..i]
    let mut dp = vec![INF; (n + 1) * w];
    for i in 0..=n {
        dp[i * w] = 0;
    }
    for i in 1..=n {
        for j in 1..=m.min(i) {
            let skip = dp[(i - 1) * w + j];
            let take = dp[(i - 1) * w + j - 1].saturating_add(long[i - 1].abs_diff(short[j - 1]) as u64);
            dp[i * w + j] = skip.min(take);
        }
    }
    let mut picked = Vec::with_capacity(m);
    let (mut i, mut j) = (n, m);
    while j > 0 {
        // skipping the rightmost remaining element on ties keeps matches leftmost
        if i > j && dp[(i - 1) * w + j] == dp[i * w + j] {
            i -= 1;
        } else {
            picked.push(i - 1);
            i -= 1;
            j -= 1;
        }
    }
    picked.reverse();
    picked
}

/// Where a chain lives in the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainLine {
    /// Positions are rows of this column.
    Column(usize),
    /// Positions are columns of this row.
    Row(usize),
}

impl ChainLine {
    pub fn trap(self, pos: usize) -> TrapIndex {
        match self {
            ChainLine::Column(col) => TrapIndex::new(col, pos),
            ChainLine::Row(row) => TrapIndex::new(pos, row),
        }
    }

    fn direction(self, sign: Sign) -> Direction {
        let axis = match self {
            ChainLine::Column(_) => Axis::Y,
            ChainLine::Row(_) => Axis::X,
        };
        Direction { axis, sign }
    }
}

/// Expands a plan into one extraction batch, the step batches toward smaller
/// indices, the step batches toward larger indices, and one implantation
/// batch. Sources in `pre_extracted` already sit in dynamic traps and are
/// only implanted.
pub fn plan_to_sequence(plan: &ChainPlan, line: ChainLine, pre_extracted: &BTreeSet<usize>) -> ActuationSequence {
    chain_sequence(plan, line, pre_extracted, &BTreeSet::new())
}

/// As [`plan_to_sequence`], except that atoms whose source is in `hold` are
/// always extracted and are left in their dynamic traps at the destination.
pub(crate) fn chain_sequence(
    plan: &ChainPlan,
    line: ChainLine,
    pre_extracted: &BTreeSet<usize>,
    hold: &BTreeSet<usize>,
) -> ActuationSequence {
    let active: Vec<(usize, usize)> = plan
        .assignment
        .iter()
        .copied()
        .filter(|&(s, d)| s != d || pre_extracted.contains(&s) || hold.contains(&s))
        .collect();

    let mut seq = ActuationSequence::new();
    seq.push(Batch::extract(active.iter().filter(|(s, _)| !pre_extracted.contains(s)).map(|&(s, _)| line.trap(s))));

    let down: Vec<(usize, usize)> = active.iter().copied().filter(|&(s, d)| d < s).collect();
    let longest = down.iter().map(|&(s, d)| s - d).max().unwrap_or(0);
    for k in 0..longest {
        let at = down.iter().filter(|&&(s, d)| s - d > k).map(|&(s, _)| line.trap(s - k));
        seq.push(Batch::step(line.direction(Sign::Minus), at));
    }

    let up: Vec<(usize, usize)> = active.iter().copied().filter(|&(s, d)| d > s).collect();
    let longest = up.iter().map(|&(s, d)| d - s).max().unwrap_or(0);
    for k in 0..longest {
        let at = up.iter().filter(|&&(s, d)| d - s > k).map(|&(s, _)| line.trap(s + k));
        seq.push(Batch::step(line.direction(Sign::Plus), at));
    }

    seq.push(Batch::implant(active.iter().filter(|(s, _)| !hold.contains(s)).map(|&(_, d)| line.trap(d))));
    seq
}
