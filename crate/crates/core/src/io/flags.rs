//! Flag CSV: one row per measurement with the FDE verdict.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{FdeError, Result};
use crate::measurement::{EpochSet, FdeResult};

pub const FLAG_COLUMNS: [&str; 7] = [
    "time_s",
    "trace_id",
    "sv_id",
    "method",
    "fault_flag",
    "exclusion_rank",
    "statistic_at_stop",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlagCsvRow {
    pub time_s: f64,
    pub trace_id: String,
    pub sv_id: String,
    pub method: String,
    pub fault_flag: u8,
    pub exclusion_rank: Option<usize>,
    pub statistic_at_stop: f64,
}

pub fn flag_rows(epoch: &EpochSet, result: &FdeResult) -> Vec<FlagCsvRow> {
    let stat = result.final_statistic().unwrap_or(f64::NAN);
    epoch
        .measurements
        .iter()
        .enumerate()
        .map(|(i, m)| FlagCsvRow {
            time_s: epoch.timestamp,
            trace_id: epoch.trace_id.clone(),
            sv_id: m.sv_id.clone(),
            method: result.method.to_string(),
            fault_flag: u8::from(result.flags[i]),
            exclusion_rank: result.exclusion_rank(i),
            statistic_at_stop: stat,
        })
        .collect()
}

pub fn write_flags<W: Write>(out: W, epochs: &[EpochSet], results: &[FdeResult]) -> Result<()> {
    if epochs.len() != results.len() {
        return Err(FdeError::InvalidArgument("one result per epoch required".into()));
    }
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(FLAG_COLUMNS).map_err(std::io::Error::from)?;
    for (e, r) in epochs.iter().zip(results) {
        for row in flag_rows(e, r) {
            w.serialize(row).map_err(std::io::Error::from)?;
        }
    }
    w.flush()?;
    Ok(())
}
