//! Stochastic loading and loss, and the measure/actuate protocol loop.
//!
//! Each atom carries a corruption, its probability of still being present.
//! Addressed atoms are charged `p_alpha` or `p_nu` per operation and every
//! other atom is charged `exp(-duration / tau)` per batch. Measurement samples
//! each atom once with its corruption and resets survivors to 1.

use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::lattice::{ArrayState, Configuration, GridSpec, TrapIndex};
use crate::ops::{
    apply_batch, apply_batch_lenient, count_ops, ActuationSequence, Batch, BatchKind, ElementaryOp, OpCounts,
};
use crate::planner::Planner;
use crate::trace::{TraceEvent, TRACE_VERSION};

/// Loading efficiency, per-operation survival, lifetime and timings (SI units).
///
/// Missing fields in JSON take their [`LossParams::experimental`] values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LossParams {
    pub epsilon: f64,
    pub p_alpha: f64,
    pub p_nu: f64,
    /// Trap lifetime; `null` in JSON means no idle loss.
    #[serde(serialize_with = "ser_tau", deserialize_with = "de_tau")]
    pub tau: f64,
    pub t_alpha: f64,
    pub t_nu: f64,
    pub t_mot: f64,
    pub t_image: f64,
}

fn ser_tau<S: Serializer>(tau: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if tau.is_finite() {
        s.serialize_some(tau)
    } else {
        s.serialize_none()
    }
}

fn de_tau<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
}

impl Default for LossParams {
    fn default() -> Self {
        Self::experimental()
    }
}

impl LossParams {
    /// Representative values for a present-day tweezer array.
    pub fn experimental() -> Self {
        LossParams {
            epsilon: 0.6,
            p_alpha: 0.985,
            p_nu: 0.985,
            tau: 60.0,
            t_alpha: 15e-6,
            t_nu: 67e-6,
            t_mot: 0.1,
            t_image: 0.02,
        }
    }

    /// Same loading and timing, no loss of any kind.
    pub fn lossless() -> Self {
        LossParams { p_alpha: 1.0, p_nu: 1.0, tau: f64::INFINITY, ..Self::experimental() }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("epsilon", self.epsilon), ("p_alpha", self.p_alpha), ("p_nu", self.p_nu)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::config(format!("{name} = {p} is not a probability")));
            }
        }
        if self.tau.is_nan() || self.tau <= 0.0 {
            return Err(Error::config("tau must be positive"));
        }
        for (name, t) in
            [("t_alpha", self.t_alpha), ("t_nu", self.t_nu), ("t_mot", self.t_mot), ("t_image", self.t_image)]
        {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(Error::config(format!("{name} = {t} must be a finite non-negative time")));
            }
        }
        Ok(())
    }

    /// Survival of an idle atom over `duration`.
    pub fn idle_survival(&self, duration: f64) -> f64 {
        (-duration / self.tau).exp()
    }

    pub fn op_survival(&self, kind: BatchKind) -> f64 {
        match kind {
            BatchKind::Transfer => self.p_alpha,
            BatchKind::Displacement => self.p_nu,
        }
    }

    pub fn batch_duration(&self, batch: &Batch) -> f64 {
        batch.duration(self.t_alpha, self.t_nu)
    }
}

/// Every trap independently occupied with probability `epsilon`.
pub fn sample_loading(spec: GridSpec, epsilon: f64, rng: &mut impl Rng) -> ArrayState {
    let mut state = ArrayState::empty(spec);
    for i in 0..spec.num_traps() {
        if rng.random_bool(epsilon) {
            state.load(spec.trap_at(i));
        }
    }
    state
}

/// Exactly `atoms` atoms placed uniformly at random.
pub fn sample_exact(spec: GridSpec, atoms: usize, rng: &mut impl Rng) -> Result<ArrayState> {
    if atoms > spec.num_traps() {
        return Err(Error::usage(format!("{atoms} atoms do not fit in {} traps", spec.num_traps())));
    }
    let config: Configuration =
        rand::seq::index::sample(rng, spec.num_traps(), atoms).into_iter().map(|i| spec.trap_at(i)).collect();
    ArrayState::from_configuration(spec, &config)
}

/// Charges one batch eagerly: addressed atoms by the operation survival,
/// all others by idle survival over the batch duration.
pub fn charge_batch_loss(state: &mut ArrayState, batch: &Batch, params: &LossParams) {
    let Some(kind) = batch.kind() else { return };
    let op = params.op_survival(kind);
    let idle = params.idle_survival(params.batch_duration(batch));
    let addressed = addressed_ids(state, batch);
    for atom in state.atoms_mut() {
        atom.corruption *= if addressed.contains(&atom.id.0) { op } else { idle };
    }
}

fn addressed_ids(state: &ArrayState, batch: &Batch) -> Vec<u32> {
    batch
        .ops()
        .iter()
        .filter_map(|op| match *op {
            ElementaryOp::Extract(t) => state.static_atom(t),
            ElementaryOp::Implant(t) | ElementaryOp::Step { at: t, .. } => state.dynamic_atom(t),
            ElementaryOp::NoOp => None,
        })
        .map(|a| a.id.0)
        .collect()
}

/// Samples every atom with its corruption, removes the lost ones and resets
/// survivors to corruption 1.
pub fn measure(state: &mut ArrayState, rng: &mut impl Rng) -> Result<Configuration> {
    if !state.dynamic_is_empty() {
        return Err(Error::contract("measurement with atoms still in dynamic traps"));
    }
    state.retain_atoms(|atom| {
        let keep = atom.corruption >= 1.0 || rng.random::<f64>() < atom.corruption;
        atom.corruption = 1.0;
        keep
    });
    Ok(state.configuration())
}

/// When loss is sampled.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplingMode {
    /// Corruption accumulates and is sampled at the next measurement.
    #[default]
    Deferred,
    /// Each atom's survival is sampled whenever it is addressed; lost atoms
    /// vanish mid-cycle and later operations on their traps do nothing.
    Immediate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrialOptions {
    /// Reject loaded configurations with fewer atoms than this.
    pub threshold: Option<usize>,
    pub mode: SamplingMode,
    /// Hard cap on actuated cycles; reaching it counts as a stall.
    pub max_cycles: usize,
}

impl Default for TrialOptions {
    fn default() -> Self {
        TrialOptions { threshold: None, mode: SamplingMode::Deferred, max_cycles: 1000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleRecord {
    /// Atoms detected before the cycle was planned.
    pub atoms: usize,
    pub counts: OpCounts,
    pub control_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub success: bool,
    /// The planner stopped making progress.
    pub stalled: bool,
    /// Actuated cycles.
    pub cycles: usize,
    pub initial_atoms: usize,
    pub final_atoms: usize,
    /// Images taken while loading, including the accepted one.
    pub loading_images: usize,
    /// All images: loading plus one per actuated cycle.
    pub images: usize,
    pub control_time: f64,
    /// MOT loading, imaging and control time.
    pub elapsed: f64,
    pub per_cycle: Vec<CycleRecord>,
}

impl TrialRecord {
    pub fn totals(&self) -> OpCounts {
        self.per_cycle.iter().map(|c| c.counts).sum()
    }
}

/// Per-trial random stream: the global seed selects the key, the trial
/// index the stream, so trials are independent of execution order.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Lazy idle-loss bookkeeping: each atom remembers when it was last charged.
struct Exposure {
    now: f64,
    last: Vec<f64>,
}

impl Exposure {
    fn new(ids: usize) -> Self {
        Exposure { now: 0.0, last: vec![0.0; ids] }
    }

    /// Survival factor of `id` from its last charge until now, then marks it
    /// charged through the end of an operation of length `dur`.
    fn settle(&mut self, id: u32, dur: f64, params: &LossParams) -> f64 {
        let slot = &mut self.last[id as usize];
        let factor = params.idle_survival(self.now - *slot);
        *slot = self.now + dur;
        factor
    }
}

fn execute_cycle(
    state: &mut ArrayState,
    seq: &ActuationSequence,
    params: &LossParams,
    mode: SamplingMode,
    rng: &mut impl Rng,
) -> Result<OpCounts> {
    let mut clock = Exposure::new(state.issued_ids());
    let mut counts = OpCounts::default();
    for batch in seq {
        let Some(kind) = batch.kind() else { continue };
        let dur = params.batch_duration(batch);
        let op = params.op_survival(kind);
        for o in batch.ops() {
            let slot = match *o {
                ElementaryOp::Extract(t) => state.static_slot(t),
                ElementaryOp::Implant(t) | ElementaryOp::Step { at: t, .. } => state.dynamic_slot(t),
                ElementaryOp::NoOp => continue,
            };
            let Some(atom) = slot.as_mut() else { continue };
            let p = clock.settle(atom.id.0, dur, params) * op;
            match mode {
                SamplingMode::Deferred => atom.corruption *= p,
                SamplingMode::Immediate => {
                    if p < 1.0 && rng.random::<f64>() >= p {
                        *slot = None;
                    }
                }
            }
        }
        counts += match mode {
            SamplingMode::Deferred => apply_batch(state, batch)?,
            SamplingMode::Immediate => apply_batch_lenient(state, batch),
        };
        clock.now += dur;
    }
    // idle exposure up to the end of the cycle
    let now = clock.now;
    match mode {
        SamplingMode::Deferred => {
            for atom in state.atoms_mut() {
                atom.corruption *= params.idle_survival(now - clock.last[atom.id.0 as usize]);
            }
        }
        SamplingMode::Immediate => {
            state.retain_atoms(|atom| {
                let p = params.idle_survival(now - clock.last[atom.id.0 as usize]);
                p >= 1.0 || rng.random::<f64>() < p
            });
        }
    }
    Ok(counts)
}

/// Runs one protocol: load (with optional rejection), then measure, plan and
/// actuate until the target is contained or fewer atoms than target traps
/// remain.
pub fn run_trial(
    spec: GridSpec,
    params: &LossParams,
    planner: Planner,
    options: &TrialOptions,
    trial: u64,
    rng: &mut impl Rng,
) -> Result<TrialRecord> {
    run_trial_traced(spec, params, planner, options, trial, rng, None)
}

pub(crate) fn run_trial_traced(
    spec: GridSpec,
    params: &LossParams,
    planner: Planner,
    options: &TrialOptions,
    trial: u64,
    rng: &mut impl Rng,
    mut trace: Option<&mut Vec<TraceEvent>>,
) -> Result<TrialRecord> {
    if let Some(n) = options.threshold {
        if n > spec.num_traps() {
            return Err(Error::usage(format!("threshold {n} exceeds {} traps", spec.num_traps())));
        }
        if params.epsilon <= 0.0 && n > 0 {
            return Err(Error::usage("a positive threshold can never be met with epsilon = 0"));
        }
    }
    let mut loading_images = 0;
    let mut state = loop {
        let s = sample_loading(spec, params.epsilon, rng);
        loading_images += 1;
        if options.threshold.is_none_or(|n| s.static_count() >= n) {
            break s;
        }
    };
    let initial_atoms = state.static_count();
    let needed = spec.target_size();

    let mut record = TrialRecord {
        trial,
        success: false,
        stalled: false,
        cycles: 0,
        initial_atoms,
        final_atoms: initial_atoms,
        loading_images,
        images: loading_images,
        control_time: 0.0,
        elapsed: 0.0,
        per_cycle: Vec::new(),
    };
    let mut config = state.configuration();
    let mut unchanged = 0;
    loop {
        if let Some(t) = trace.as_deref_mut() {
            t.push(TraceEvent::measure(record.cycles, &config));
        }
        if state.contains_target() {
            record.success = true;
            break;
        }
        if config.len() < needed {
            break;
        }
        if record.cycles >= options.max_cycles {
            record.stalled = true;
            break;
        }
        let seq = planner.plan(&state)?;
        if seq.is_empty() {
            record.stalled = true;
            break;
        }
        if let Some(t) = trace.as_deref_mut() {
            t.extend(TraceEvent::batches(record.cycles, &seq));
        }
        let atoms = config.len();
        let counts = execute_cycle(&mut state, &seq, params, options.mode, rng)?;
        debug_assert_eq!(counts.transfers, count_ops(&seq).transfers);
        let control_time = seq.duration(params.t_alpha, params.t_nu);
        record.per_cycle.push(CycleRecord { atoms, counts, control_time });
        record.control_time += control_time;
        record.cycles += 1;
        record.images += 1;

        let next = measure(&mut state, rng)?;
        if next == config {
            unchanged += 1;
            if unchanged >= 2 {
                record.stalled = true;
                break;
            }
        } else {
            unchanged = 0;
        }
        config = next;
    }
    record.final_atoms = config.len();
    record.elapsed = params.t_mot + record.images as f64 * params.t_image + record.control_time;
    Ok(record)
}

/// Records of one Monte Carlo run, in trial order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarlo {
    pub records: Vec<TrialRecord>,
    pub summary: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub trials: usize,
    pub successes: usize,
    pub success_probability: f64,
    /// Binomial standard error of `success_probability`.
    pub standard_error: f64,
    pub stalls: usize,
    pub mean_cycles: f64,
    pub mean_initial_atoms: f64,
    pub mean_elapsed: f64,
    /// Total elapsed time divided by the number of successes.
    pub time_per_success: Option<f64>,
}

impl Summary {
    pub fn from_records(records: &[TrialRecord]) -> Self {
        let n = records.len();
        let nf = n.max(1) as f64;
        let successes = records.iter().filter(|r| r.success).count();
        let p = successes as f64 / nf;
        let total_elapsed: f64 = records.iter().map(|r| r.elapsed).sum();
        Summary {
            trials: n,
            successes,
            success_probability: p,
            standard_error: (p * (1.0 - p) / nf).sqrt(),
            stalls: records.iter().filter(|r| r.stalled).count(),
            mean_cycles: records.iter().map(|r| r.cycles as f64).sum::<f64>() / nf,
            mean_initial_atoms: records.iter().map(|r| r.initial_atoms as f64).sum::<f64>() / nf,
            mean_elapsed: total_elapsed / nf,
            time_per_success: (successes > 0).then(|| total_elapsed / successes as f64),
        }
    }
}

/// Runs `trials` independent protocols in parallel. Trial `i` uses the
/// stream [`trial_rng`]`(seed, i)`, so results do not depend on scheduling.
pub fn run_monte_carlo(
    spec: GridSpec,
    params: &LossParams,
    planner: Planner,
    options: &TrialOptions,
    trials: u64,
    seed: u64,
) -> Result<MonteCarlo> {
    if trials == 0 {
        return Err(Error::usage("at least one trial is required"));
    }
    params.validate()?;
    let records = (0..trials)
        .into_par_iter()
        .map(|i| run_trial(spec, params, planner, options, i, &mut trial_rng(seed, i)))
        .collect::<Result<Vec<_>>>()?;
    let summary = Summary::from_records(&records);
    Ok(MonteCarlo { records, summary })
}

/// Re-runs trial `trial` of a Monte Carlo run and returns its protocol trace.
pub fn trace_trial(
    spec: GridSpec,
    params: &LossParams,
    planner: Planner,
    options: &TrialOptions,
    seed: u64,
    trial: u64,
) -> Result<(TrialRecord, Vec<TraceEvent>)> {
    let mut events = vec![TraceEvent::Header { version: TRACE_VERSION, grid: spec, planner, seed, trial }];
    let record =
        run_trial_traced(spec, params, planner, options, trial, &mut trial_rng(seed, trial), Some(&mut events))?;
    Ok((record, events))
}

/// Column order of [`write_trials_csv`].
pub const TRIALS_CSV_HEADER: [&str; 14] = [
    "trial",
    "success",
    "stalled",
    "cycles",
    "initial_atoms",
    "final_atoms",
    "loading_images",
    "images",
    "transfers",
    "displacements",
    "transfer_batches",
    "displacement_batches",
    "control_time",
    "elapsed",
];

/// One row per trial; see [`TRIALS_CSV_HEADER`].
pub fn write_trials_csv(out: impl Write, records: &[TrialRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRIALS_CSV_HEADER)?;
    for r in records {
        let c = r.totals();
        w.write_record([
            r.trial.to_string(),
            u8::from(r.success).to_string(),
            u8::from(r.stalled).to_string(),
            r.cycles.to_string(),
            r.initial_atoms.to_string(),
            r.final_atoms.to_string(),
            r.loading_images.to_string(),
            r.images.to_string(),
            c.transfers.to_string(),
            c.displacements.to_string(),
            c.transfer_batches.to_string(),
            c.displacement_batches.to_string(),
            format!("{:.9}", r.control_time),
            format!("{:.9}", r.elapsed),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_records_json(path: &Path, records: &[TrialRecord]) -> Result<()> {
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer(file, records)?;
    Ok(())
}

/// Where each atom of `state` sits, keyed by id; test helper for loss checks.
#[doc(hidden)]
pub fn corruption_by_id(state: &ArrayState) -> Vec<(u32, TrapIndex, f64)> {
    let mut v: Vec<_> = state.atoms().map(|(t, a)| (a.id.0, t, a.corruption)).collect();
    v.sort_by_key(|x| x.0);
    v
}
