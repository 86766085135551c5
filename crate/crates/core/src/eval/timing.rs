//! Per-call wall-time records and their grouped summaries.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fde::{run_fde, FdeOptions};
use crate::measurement::{EpochSet, FdeMethod};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRecord {
    pub method: FdeMethod,
    pub measurement_count: usize,
    pub fault_count: usize,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupBy {
    MeasurementCount,
    FaultCount,
}

impl GroupBy {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::MeasurementCount => "measurement_count",
            Self::FaultCount => "fault_count",
        }
    }

    fn key(&self, r: &TimingRecord) -> usize {
        match self {
            Self::MeasurementCount => r.measurement_count,
            Self::FaultCount => r.fault_count,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingGroup {
    pub method: FdeMethod,
    pub group_by: GroupBy,
    pub group_value: usize,
    pub count: usize,
    pub mean_s: f64,
    /// Population standard deviation; zero for a single record.
    pub std_s: f64,
}

/// Times `method` on each epoch, one call at a time on the current thread.
/// Only the FDE call is inside the timed region.
pub fn timing_profile(method: FdeMethod, epochs: &[EpochSet], threshold: f64, opts: &FdeOptions) -> Result<Vec<TimingRecord>> {
    epochs
        .iter()
        .map(|e| {
            let r = run_fde(e, method, threshold, opts)?;
            Ok(TimingRecord {
                method,
                measurement_count: e.len(),
                fault_count: e
                    .truth_labels()
                    .map_or(0, |t| t.iter().filter(|&&f| f).count()),
                wall_time_s: r.wall_time_s.max(1e-9),
            })
        })
        .collect()
}

/// Mean and standard deviation per (method, key), sorted by method then key.
pub fn group_timing(records: &[TimingRecord], by: GroupBy) -> Vec<TimingGroup> {
    let mut buckets: Vec<((FdeMethod, usize), Vec<f64>)> = Vec::new();
    for r in records {
        let key = (r.method, by.key(r));
        match buckets.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(r.wall_time_s),
            None => buckets.push((key, vec![r.wall_time_s])),
        }
    }
    buckets.sort_by_key(|((m, k), _)| (FdeMethod::ALL.iter().position(|x| x == m), *k));
    buckets
        .into_iter()
        .map(|((method, group_value), v)| {
            let n = v.len() as f64;
            let mean = v.iter().sum::<f64>() / n;
            let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
            TimingGroup {
                method,
                group_by: by,
                group_value,
                count: v.len(),
                mean_s: mean,
                std_s: var.sqrt(),
            }
        })
        .collect()
}
