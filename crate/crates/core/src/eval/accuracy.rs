//! Horizontal-error percentiles per trace.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geodesy::{horizontal_error, Ecef};
use crate::measurement::EpochSet;
use crate::residual::wls_solve;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorMetricRecord {
    pub trace_id: String,
    pub p50_horizontal_m: f64,
    pub p95_horizontal_m: f64,
    pub combined: f64,
}

/// Percentile with linear interpolation between order statistics
/// (`p` in `[0, 100]`).
pub fn percentile(values: &[f64], p: f64) -> f64 {
    assert!(!values.is_empty(), "percentile of empty sample");
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = (p / 100.0).clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

/// Per-trace p50/p95 and their mean, plus the grand mean of `combined` over
/// traces. Traces without samples are skipped with a warning.
pub fn horizontal_error_metric(errors_by_trace: &[(String, Vec<f64>)]) -> (Vec<ErrorMetricRecord>, f64) {
    let records: Vec<ErrorMetricRecord> = errors_by_trace
        .iter()
        .filter(|(trace, errs)| {
            if errs.is_empty() {
                log::warn!("trace {trace}: no epochs with truth, skipped");
            }
            !errs.is_empty()
        })
        .map(|(trace, errs)| {
            let p50 = percentile(errs, 50.0);
            let p95 = percentile(errs, 95.0);
            ErrorMetricRecord {
                trace_id: trace.clone(),
                p50_horizontal_m: p50,
                p95_horizontal_m: p95,
                combined: 0.5 * (p50 + p95),
            }
        })
        .collect();
    let grand = if records.is_empty() {
        f64::NAN
    } else {
        records.iter().map(|r| r.combined).sum::<f64>() / records.len() as f64
    };
    (records, grand)
}

/// WLS position from the measurements left unflagged.
pub fn position_after_fde(epoch: &EpochSet, flags: &[bool]) -> Result<Ecef> {
    Ok(wls_solve(&epoch.retain_unflagged(flags), None)?.rx_pos)
}

/// Horizontal error after exclusion, `None` when the epoch has no truth or the
/// remaining geometry cannot be solved.
pub fn epoch_horizontal_error(epoch: &EpochSet, flags: &[bool]) -> Option<f64> {
    let truth = epoch.truth_rx_pos?;
    position_after_fde(epoch, flags)
        .ok()
        .map(|p| horizontal_error(&p, &truth))
}

/// Groups per-epoch errors by trace id, keeping first-appearance order.
pub fn errors_by_trace(epochs: &[EpochSet], errors: &[Option<f64>]) -> Vec<(String, Vec<f64>)> {
    let mut out: Vec<(String, Vec<f64>)> = Vec::new();
    for (e, err) in epochs.iter().zip(errors) {
        let slot = match out.iter().position(|(t, _)| *t == e.trace_id) {
            Some(i) => i,
            None => {
                out.push((e.trace_id.clone(), Vec::new()));
                out.len() - 1
            }
        };
        if let Some(v) = err {
            out[slot].1.push(*v);
        }
    }
    out
}
