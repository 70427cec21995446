//! Column-pairing redistribution ("red-rec").
//!
//! Each column is compared with the number of target atoms it should hold.
//! Neutral columns are solved as independent chains; surplus atoms in donor
//! columns are carried along empty external rows to receiver columns in
//! streamlined sequences that extract and implant every redistributed atom
//! exactly once.

mod cycle;
mod donor;

pub use cycle::{reconfigure_column, redrec_cycle};
pub use donor::{assign_open_rows, label_donor, streamlined_sequence, DonorLabeling, InsufficientRows};

use serde::Serialize;

use crate::lattice::ArrayState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnClass {
    Donor,
    Receiver,
    Neutral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ColumnBalance {
    pub column: usize,
    pub measured: usize,
    pub desired: usize,
    pub imbalance: i64,
    pub class: ColumnClass,
}

/// Per-column measured and desired atom counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ColumnLedger {
    pub columns: Vec<ColumnBalance>,
}

impl ColumnLedger {
    pub fn imbalances(&self) -> Vec<i64> {
        self.columns.iter().map(|c| c.imbalance).collect()
    }

    pub fn total_imbalance(&self) -> i64 {
        self.columns.iter().map(|c| c.imbalance).sum()
    }

    pub fn donors(&self) -> impl Iterator<Item = &ColumnBalance> {
        self.columns.iter().filter(|c| c.class == ColumnClass::Donor)
    }

    pub fn receivers(&self) -> impl Iterator<Item = &ColumnBalance> {
        self.columns.iter().filter(|c| c.class == ColumnClass::Receiver)
    }
}

pub fn classify_columns(state: &ArrayState) -> ColumnLedger {
    let spec = state.spec();
    let mut measured = vec![0usize; spec.width()];
    for (t, _) in state.atoms() {
        measured[t.col] += 1;
    }
    let columns = measured
        .into_iter()
        .enumerate()
        .map(|(column, measured)| {
            let desired = spec.desired_in_column(column);
            let imbalance = measured as i64 - desired as i64;
            let class = match imbalance {
                i if i > 0 => ColumnClass::Donor,
                i if i < 0 => ColumnClass::Receiver,
                _ => ColumnClass::Neutral,
            };
            ColumnBalance { column, measured, desired, imbalance, class }
        })
        .collect();
    ColumnLedger { columns }
}

/// A donor/receiver pair and the atoms it can exchange when picked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ColumnPair {
    pub donor: usize,
    pub receiver: usize,
    pub quota: usize,
}

impl ColumnPair {
    pub fn distance(&self) -> usize {
        self.donor.abs_diff(self.receiver)
    }
}

pub fn pair_columns(ledger: &ColumnLedger) -> Vec<ColumnPair> {
    pair_imbalances(&ledger.imbalances())
}

/// Pairing order on raw imbalances.
///
/// First, a left-to-right scan over adjacent columns picks pairs whose donor
/// can cover the receiver's whole deficit. Then the remaining pairs are
/// picked by exchangeable atoms (descending), column distance (ascending) and
/// donor index (ascending). Residual surpluses and deficits are consumed as
/// pairs are picked.
pub fn pair_imbalances(imbalances: &[i64]) -> Vec<ColumnPair> {
    let mut residual = imbalances.to_vec();
    let mut pairs = Vec::new();

    for c in 0..residual.len().saturating_sub(1) {
        for (d, r) in [(c, c + 1), (c + 1, c)] {
            if residual[d] > 0 && residual[r] < 0 && residual[d] >= -residual[r] {
                let quota = -residual[r];
                residual[d] -= quota;
                residual[r] = 0;
                pairs.push(ColumnPair { donor: d, receiver: r, quota: quota as usize });
            }
        }
    }

    loop {
        let mut best: Option<(i64, usize, usize, usize)> = None;
        for (d, &sd) in residual.iter().enumerate().filter(|(_, &v)| v > 0) {
            for (r, &sr) in residual.iter().enumerate().filter(|(_, &v)| v < 0) {
                let exchange = sd.min(-sr);
                let key = (-exchange, d.abs_diff(r), d, r);
                if best.is_none_or(|b| key < b) {
                    best = Some(key);
                }
            }
        }
        let Some((neg_exchange, _, d, r)) = best else { break };
        residual[d] += neg_exchange;
        residual[r] -= neg_exchange;
        pairs.push(ColumnPair { donor: d, receiver: r, quota: (-neg_exchange) as usize });
    }
    pairs
}
