use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::ArrayState;
use crate::mwpm::mwpm_cycle;
use crate::ops::ActuationSequence;
use crate::redrec::redrec_cycle;

/// Which algorithm turns a measured state into one cycle of batches.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Planner {
    #[default]
    RedRec,
    Mwpm,
}

impl Planner {
    pub fn plan(self, state: &ArrayState) -> Result<ActuationSequence> {
        match self {
            Planner::RedRec => redrec_cycle(state),
            Planner::Mwpm => Ok(mwpm_cycle(state)?.sequence),
        }
    }
}

impl fmt::Display for Planner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Planner::RedRec => "redrec",
            Planner::Mwpm => "mwpm",
        })
    }
}

impl FromStr for Planner {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "redrec" => Ok(Planner::RedRec),
            "mwpm" => Ok(Planner::Mwpm),
            other => Err(Error::usage(format!("unknown planner {other:?}"))),
        }
    }
}
