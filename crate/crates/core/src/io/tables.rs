//! Result tables consumed by the plotting scripts.

use std::io::Write;

use serde::Serialize;

use crate::error::Result;
use crate::eval::{ComplexityRow, RocPoint, TimingGroup, TimingRecord};
use crate::measurement::FdeMethod;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RocCsvRow {
    pub method: FdeMethod,
    pub scenario: String,
    pub bias_m: f64,
    pub fault_count: usize,
    pub threshold: f64,
    pub true_positive_rate: f64,
    pub false_alarm_rate: f64,
    pub auc: f64,
}

impl RocCsvRow {
    pub fn from_curve(method: FdeMethod, scenario: &str, bias_m: f64, fault_count: usize, points: &[RocPoint], auc: f64) -> Vec<Self> {
        points
            .iter()
            .map(|p| Self {
                method,
                scenario: scenario.into(),
                bias_m,
                fault_count,
                threshold: p.threshold,
                true_positive_rate: p.true_positive_rate,
                false_alarm_rate: p.false_alarm_rate,
                auc,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdErrorRow {
    pub method: FdeMethod,
    pub threshold: f64,
    pub grand_mean_m: f64,
    pub baseline_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComplexityCsvRow {
    pub m: u32,
    pub f: u32,
    pub k: u32,
    pub edm: String,
    pub residual: String,
    pub ss: String,
}

impl From<&ComplexityRow> for ComplexityCsvRow {
    fn from(r: &ComplexityRow) -> Self {
        Self {
            m: r.m,
            f: r.f,
            k: r.k,
            edm: r.edm.to_string(),
            residual: r.residual.to_string(),
            ss: r.ss.to_string(),
        }
    }
}

/// Writes serializable rows with a header derived from the row type.
pub fn write_rows<W: Write, T: Serialize>(out: W, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(std::io::Error::from)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_timing_groups<W: Write>(out: W, groups: &[TimingGroup]) -> Result<()> {
    write_rows(out, groups)
}

pub fn write_timing_records<W: Write>(out: W, records: &[TimingRecord]) -> Result<()> {
    write_rows(out, records)
}
