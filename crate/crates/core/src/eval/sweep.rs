//! Threshold sweeps over epoch sets.

use crate::error::{FdeError, Result};
use crate::fde::{run_fde, truncate_to_threshold, FdeOptions, EXHAUSTIVE_THRESHOLD};
use crate::measurement::{EpochSet, FdeMethod, FdeResult};

use super::accuracy::{epoch_horizontal_error, errors_by_trace, horizontal_error_metric};
use super::roc::ThresholdRun;

/// Flag sets for every grid threshold.
///
/// Greedy methods with single removals run once per epoch to their guard and
/// are truncated per threshold, which gives the same flags as separate runs.
/// Other configurations run each threshold separately.
pub fn threshold_sweep(epochs: &[EpochSet], method: FdeMethod, grid: &[f64], opts: &FdeOptions) -> Result<Vec<ThresholdRun>> {
    let shared = method != FdeMethod::Ss && opts.removals_per_iter == 1;
    if shared {
        let full: Vec<FdeResult> = crate::par::map_range(epochs.len(), |i| {
            run_fde(&epochs[i], method, EXHAUSTIVE_THRESHOLD, opts)
        })
        .into_iter()
        .collect::<Result<_>>()?;
        return Ok(grid
            .iter()
            .map(|&t| ThresholdRun {
                threshold: t,
                results: full.iter().map(|r| truncate_to_threshold(r, t)).collect(),
            })
            .collect());
    }
    grid.iter()
        .map(|&t| {
            let results = crate::par::map_range(epochs.len(), |i| run_fde(&epochs[i], method, t, opts))
                .into_iter()
                .collect::<Result<_>>()?;
            Ok(ThresholdRun { threshold: t, results })
        })
        .collect()
}

/// Grand-mean horizontal error after exclusion for each run.
pub fn threshold_error_curve(epochs: &[EpochSet], runs: &[ThresholdRun]) -> Result<Vec<(f64, f64)>> {
    runs.iter()
        .map(|run| {
            if run.results.len() != epochs.len() {
                return Err(FdeError::InvalidArgument("run and epoch counts differ".into()));
            }
            Ok((run.threshold, grand_mean_error(epochs, |i| &run.results[i].flags)))
        })
        .collect()
}

/// Grand-mean horizontal error with every measurement kept.
pub fn baseline_error(epochs: &[EpochSet]) -> f64 {
    let none: Vec<Vec<bool>> = epochs.iter().map(|e| vec![false; e.len()]).collect();
    grand_mean_error(epochs, |i| &none[i])
}

fn grand_mean_error<'a>(epochs: &[EpochSet], flags: impl Fn(usize) -> &'a Vec<bool> + Sync + Send) -> f64 {
    let errs = crate::par::map_range(epochs.len(), |i| epoch_horizontal_error(&epochs[i], flags(i)));
    horizontal_error_metric(&errors_by_trace(epochs, &errs)).1
}
