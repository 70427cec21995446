use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::GridSpec;
use crate::planner::Planner;
use crate::sim::{LossParams, TrialOptions};

pub const CONFIG_VERSION: u32 = 1;

/// Everything a run needs. Every field has a default, unknown keys are
/// rejected, and the resolved value is written next to the outputs so a run
/// can be repeated from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub version: u32,
    pub grid: GridSpec,
    pub loss: LossParams,
    pub planner: Planner,
    pub trials: u64,
    pub seed: u64,
    pub options: TrialOptions,
    pub baseline: BaselineConfig,
    /// Success-probability sweep run by `simulate` after the main grid.
    pub sweep: Option<SweepConfig>,
    pub benchmark: BenchmarkConfig,
    pub threshold: ThresholdConfig,
    pub replay: ReplayConfig,
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            version: CONFIG_VERSION,
            grid: GridSpec::square(32, 64).expect("default grid is valid"),
            loss: LossParams::experimental(),
            planner: Planner::RedRec,
            trials: 1000,
            seed: 1,
            options: TrialOptions::default(),
            baseline: BaselineConfig::default(),
            sweep: None,
            benchmark: BenchmarkConfig::default(),
            threshold: ThresholdConfig::default(),
            replay: ReplayConfig::default(),
            out: PathBuf::from("out"),
        }
    }
}

/// Inclusive integer range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    #[serde(default = "one")]
    pub step: usize,
}

fn one() -> usize {
    1
}

impl Span {
    pub fn new(start: usize, end: usize, step: usize) -> Self {
        Span { start, end, step }
    }

    pub fn values(&self) -> impl Iterator<Item = usize> {
        (self.start..=self.end).step_by(self.step.max(1))
    }

    fn check(&self, name: &str) -> Result<()> {
        if self.step == 0 || self.start > self.end {
            return Err(Error::config(format!("{name}: need start <= end and step >= 1")));
        }
        Ok(())
    }
}

/// Closed-form success surface over target sizes and trap counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BaselineConfig {
    pub sizes: Span,
    pub traps: Span,
    /// Success level for the largest-reliable-size table.
    pub level: f64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig { sizes: Span::new(1, 100, 1), traps: Span::new(1, 100, 1), level: 0.98 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepKind {
    /// One column; sizes are chain lengths.
    Chain,
    /// Square targets in arrays as wide as the target; sizes are sides.
    Square,
}

/// Grids for a success sweep. For each size, every trap count (chain) or
/// array height (square) whose overhead factor lies in
/// `[min_overhead, max_overhead]` is simulated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub kind: SweepKind,
    pub sizes: Span,
    pub min_overhead: f64,
    pub max_overhead: f64,
    /// Trials per grid; defaults to the top-level count.
    #[serde(default)]
    pub trials: Option<u64>,
    #[serde(default = "half")]
    pub level: f64,
}

fn half() -> f64 {
    0.5
}

impl SweepConfig {
    pub fn grids(&self) -> Result<Vec<GridSpec>> {
        let mut grids = Vec::new();
        for n in self.sizes.values() {
            let lo = (self.min_overhead * n as f64).ceil() as usize;
            let hi = (self.max_overhead * n as f64).floor() as usize;
            for t in lo.max(n)..=hi {
                grids.push(match self.kind {
                    SweepKind::Chain => GridSpec::chain(t, n)?,
                    SweepKind::Square => GridSpec::square(n, t)?,
                });
            }
        }
        if grids.is_empty() {
            return Err(Error::config("sweep covers no grid"));
        }
        Ok(grids)
    }
}

/// Lossless red-rec versus assignment-baseline comparison on square targets
/// in arrays `height_factor` times as tall as wide, loaded with exactly as
/// many atoms as target traps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchmarkConfig {
    pub sides: Vec<usize>,
    pub height_factor: usize,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig { sides: vec![4, 8, 16, 24, 32], height_factor: 2 }
    }
}

/// Rejection-threshold analysis on the main grid.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ThresholdConfig {
    /// Loadings below this are resampled in the run that feeds the curve;
    /// 0 feeds the curve from the unthresholded run. A floor near the
    /// optimum concentrates trials where the curve is decided.
    pub floor: usize,
    /// Trials of the floored run; defaults to the top-level count.
    pub trials: Option<u64>,
}

/// Trace to replay; when absent, trial `trial` of the main grid is traced
/// first.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReplayConfig {
    pub trace: Option<PathBuf>,
    pub trial: u64,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(msg) => Error::config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(Error::config(format!(
                "config version {} is not supported (expected {CONFIG_VERSION})",
                self.version
            )));
        }
        if self.trials == 0 {
            return Err(Error::config("trials must be at least 1"));
        }
        self.loss.validate()?;
        if self.options.max_cycles == 0 {
            return Err(Error::config("options.max_cycles must be at least 1"));
        }
        if let Some(n) = self.options.threshold {
            if n > self.grid.num_traps() {
                return Err(Error::config(format!("options.threshold {n} exceeds {} traps", self.grid.num_traps())));
            }
        }
        self.baseline.sizes.check("baseline.sizes")?;
        self.baseline.traps.check("baseline.traps")?;
        if !(0.0..=1.0).contains(&self.baseline.level) {
            return Err(Error::config("baseline.level must be a probability"));
        }
        if let Some(s) = &self.sweep {
            s.sizes.check("sweep.sizes")?;
            if !(s.min_overhead > 0.0 && s.min_overhead <= s.max_overhead) {
                return Err(Error::config("sweep: need 0 < min_overhead <= max_overhead"));
            }
            if s.trials == Some(0) {
                return Err(Error::config("sweep.trials must be at least 1"));
            }
            if !(0.0..=1.0).contains(&s.level) {
                return Err(Error::config("sweep.level must be a probability"));
            }
        }
        if self.benchmark.sides.is_empty() || self.benchmark.sides.contains(&0) || self.benchmark.height_factor == 0 {
            return Err(Error::config("benchmark needs positive sides and height_factor"));
        }
        if self.threshold.floor > self.grid.num_traps() {
            return Err(Error::config(format!("threshold.floor exceeds {} traps", self.grid.num_traps())));
        }
        if self.threshold.trials == Some(0) {
            return Err(Error::config("threshold.trials must be at least 1"));
        }
        Ok(())
    }
}
