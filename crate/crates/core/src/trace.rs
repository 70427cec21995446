//! Protocol traces as JSON Lines.
//!
//! A trace starts with one `header` record, then alternates a `measure`
//! record (the detected configuration before cycle `k`) with the `batch`
//! records actuated in that cycle. Coordinates are `[col, row]`.
//!
//! ```text
//! {"type":"header","version":1,"grid":{...},"planner":"redrec","seed":7,"trial":0}
//! {"type":"measure","cycle":0,"atoms":[[0,3],[1,5]]}
//! {"type":"batch","cycle":0,"ordinal":0,"kind":"transfer","extract":[[0,3]],"implant":[]}
//! {"type":"batch","cycle":0,"ordinal":1,"kind":"displacement","direction":"+y","traps":[[0,3]]}
//! ```

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{ArrayState, Configuration, GridSpec, TrapIndex};
use crate::ops::{apply_batch, ActuationSequence, Axis, Batch, Direction, ElementaryOp, OpCounts, Sign};
use crate::planner::Planner;

pub const TRACE_VERSION: u32 = 1;

type Coord = [usize; 2];

fn coord(t: TrapIndex) -> Coord {
    [t.col, t.row]
}

fn trap(c: Coord) -> TrapIndex {
    TrapIndex::new(c[0], c[1])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum TraceEvent {
    Header {
        version: u32,
        grid: GridSpec,
        planner: Planner,
        seed: u64,
        trial: u64,
    },
    Measure {
        cycle: usize,
        atoms: Vec<Coord>,
    },
    Batch {
        cycle: usize,
        ordinal: usize,
        #[serde(flatten)]
        body: BatchBody,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BatchBody {
    Transfer { extract: Vec<Coord>, implant: Vec<Coord> },
    Displacement { direction: String, traps: Vec<Coord> },
}

impl TraceEvent {
    pub fn measure(cycle: usize, config: &Configuration) -> Self {
        TraceEvent::Measure { cycle, atoms: config.iter().map(coord).collect() }
    }

    /// One record per batch of `seq`.
    pub fn batches(cycle: usize, seq: &ActuationSequence) -> impl Iterator<Item = TraceEvent> + '_ {
        seq.iter().enumerate().map(move |(ordinal, b)| TraceEvent::Batch {
            cycle,
            ordinal,
            body: BatchBody::from_batch(b),
        })
    }
}

impl BatchBody {
    pub fn from_batch(batch: &Batch) -> Self {
        let mut extract = Vec::new();
        let mut implant = Vec::new();
        let mut traps = Vec::new();
        let mut direction = None;
        for op in batch.ops() {
            match *op {
                ElementaryOp::Extract(t) => extract.push(coord(t)),
                ElementaryOp::Implant(t) => implant.push(coord(t)),
                ElementaryOp::Step { dir, at } => {
                    direction = Some(dir);
                    traps.push(coord(at));
                }
                ElementaryOp::NoOp => {}
            }
        }
        match direction {
            Some(dir) => BatchBody::Displacement { direction: dir.to_string(), traps },
            None => BatchBody::Transfer { extract, implant },
        }
    }

    pub fn to_batch(&self) -> Result<Batch> {
        match self {
            BatchBody::Transfer { extract, implant } => {
                let mut ops: Vec<ElementaryOp> = extract.iter().map(|&c| ElementaryOp::Extract(trap(c))).collect();
                ops.extend(implant.iter().map(|&c| ElementaryOp::Implant(trap(c))));
                Ok(Batch::new(ops))
            }
            BatchBody::Displacement { direction, traps } => {
                let dir = parse_direction(direction)?;
                Ok(Batch::step(dir, traps.iter().map(|&c| trap(c))))
            }
        }
    }
}

fn parse_direction(s: &str) -> Result<Direction> {
    let mut chars = s.chars();
    let sign = match chars.next() {
        Some('+') => Sign::Plus,
        Some('-') => Sign::Minus,
        _ => return Err(Error::usage(format!("bad direction {s:?}"))),
    };
    let axis = match (chars.next(), chars.next()) {
        (Some('x'), None) => Axis::X,
        (Some('y'), None) => Axis::Y,
        _ => return Err(Error::usage(format!("bad direction {s:?}"))),
    };
    Ok(Direction { axis, sign })
}

pub fn write_trace(mut out: impl Write, events: &[TraceEvent]) -> Result<()> {
    for e in events {
        serde_json::to_writer(&mut out, e)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_trace(input: impl BufRead) -> Result<Vec<TraceEvent>> {
    let mut events = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let event = serde_json::from_str(&line).map_err(|e| Error::usage(format!("trace line {}: {e}", n + 1)))?;
        events.push(event);
    }
    Ok(events)
}

/// Outcome of re-executing one traced cycle.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReplayedCycle {
    pub cycle: usize,
    pub batches: usize,
    pub counts: OpCounts,
    /// Atoms the lossless replay ends with.
    pub lossless_atoms: usize,
    /// Atoms detected at the next measurement, if it was traced.
    pub measured_atoms: Option<usize>,
    /// Whether the next measurement is a subset of the lossless outcome.
    pub consistent: bool,
}

/// Re-executes every traced cycle losslessly from its measured
/// configuration, checking batch legality and that each following
/// measurement only lost atoms relative to the lossless outcome.
pub fn replay(events: &[TraceEvent]) -> Result<Vec<ReplayedCycle>> {
    let Some(TraceEvent::Header { version, grid, .. }) = events.first() else {
        return Err(Error::usage("trace does not start with a header"));
    };
    if *version != TRACE_VERSION {
        return Err(Error::usage(format!("unsupported trace version {version}")));
    }
    let mut measures: Vec<(usize, Configuration)> = Vec::new();
    let mut batches: Vec<Vec<Batch>> = Vec::new();
    for e in &events[1..] {
        match e {
            TraceEvent::Measure { cycle, atoms } => {
                measures.push((*cycle, atoms.iter().map(|&c| trap(c)).collect()));
            }
            TraceEvent::Batch { cycle, body, .. } => {
                if batches.len() <= *cycle {
                    batches.resize_with(cycle + 1, Vec::new);
                }
                batches[*cycle].push(body.to_batch()?);
            }
            TraceEvent::Header { .. } => return Err(Error::usage("second header in trace")),
        }
    }

    let mut out = Vec::new();
    for (i, (cycle, config)) in measures.iter().enumerate() {
        let Some(cycle_batches) = batches.get(*cycle).filter(|b| !b.is_empty()) else { continue };
        let mut state = ArrayState::from_configuration(*grid, config)?;
        let mut counts = OpCounts::default();
        for b in cycle_batches {
            counts += apply_batch(&mut state, b)?;
        }
        let lossless = state.configuration();
        let next = measures.get(i + 1).map(|(_, c)| c);
        out.push(ReplayedCycle {
            cycle: *cycle,
            batches: cycle_batches.len(),
            counts,
            lossless_atoms: lossless.len(),
            measured_atoms: next.map(Configuration::len),
            consistent: next.is_none_or(|c| c.iter().all(|t| lossless.contains(t))),
        });
    }
    Ok(out)
}
