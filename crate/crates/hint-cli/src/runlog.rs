//! Append-only training log with monotone step numbering, emitted as
//! line-delimited JSON.

use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Record {
    Step { step: u64, loss: f64, lr: f64 },
    Eval { step: u64, psnr: f64, ssim: f64 },
    Done { steps: u64, wall_s: f64 },
}

impl Record {
    fn step_no(&self) -> Option<u64> {
        match self {
            Record::Step { step, .. } | Record::Eval { step, .. } => Some(*step),
            Record::Done { .. } => None,
        }
    }
}

#[derive(Debug, Default)]
pub struct RunLog {
    records: Vec<Record>,
}

impl RunLog {
    pub fn new() -> Self {
        RunLog::default()
    }

    /// Appends one record; step numbers must not decrease.
    pub fn push(&mut self, r: Record) -> Result<()> {
        if let (Some(prev), Some(next)) =
            (self.records.iter().rev().find_map(Record::step_no), r.step_no())
        {
            if next < prev {
                return Err(CliError::Usage(format!(
                    "run log steps must be monotone: {next} after {prev}"
                )));
            }
        }
        self.records.push(r);
        Ok(())
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn step_losses(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().filter_map(|r| match r {
            Record::Step { loss, .. } => Some(*loss),
            _ => None,
        })
    }

    /// One JSON object per line.
    pub fn to_ndjson(&self) -> String {
        self.records
            .iter()
            .map(|r| serde_json::to_string(r).expect("record serializes"))
            .collect::<Vec<_>>()
            .join("\n")
    }
}
