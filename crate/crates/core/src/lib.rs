//! Atom-array reconfiguration planning and loss simulation.
//!
//! The crate models a grid of static optical traps loaded stochastically with
//! atoms, a dynamic trap layer that carries atoms between static traps, and
//! planners that turn a measured configuration into parallel control batches:
//!
//! * [`redrec`]: the column-pairing redistribution heuristic.
//! * [`mwpm`]: a displacement-optimal assignment baseline.
//! * [`chain`]: the exact solver for a single chain of traps.
//!
//! [`sim`] runs the measure/actuate protocol under per-operation loss and
//! [`analytics`] turns trial records into success, transition and wait-time
//! statistics.

pub mod analytics;
pub mod chain;
pub mod cli;
pub mod error;
pub mod lattice;
pub mod mwpm;
pub mod ops;
pub mod planner;
pub mod redrec;
pub mod sim;
pub mod trace;

pub use error::{Error, Result};
pub use lattice::{target_region, ArrayState, Atom, AtomId, Configuration, GridSpec, TrapIndex};
pub use ops::{ActuationSequence, Batch, ElementaryOp, OpCounts};
pub use planner::Planner;
