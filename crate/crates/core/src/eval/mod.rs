//! Accuracy, timing and complexity evaluation.

mod accuracy;
mod calibrate;
mod complexity;
mod roc;
mod sweep;
mod timing;

pub use accuracy::{
    epoch_horizontal_error, errors_by_trace, horizontal_error_metric, percentile, position_after_fde,
    ErrorMetricRecord,
};
pub use calibrate::{calibrate_threshold, log_grid, published_grid, simulation_grid, Calibration};
pub use complexity::{
    binomial, complexity_curves, edm_cost, residual_cost, ss_cost, ComplexityRow, DEFAULT_K,
};
pub use roc::{auc, roc_curve, roc_point, tpr_at, Confusion, RocPoint, ThresholdRun};
pub use sweep::{baseline_error, threshold_error_curve, threshold_sweep};
pub use timing::{group_timing, timing_profile, GroupBy, TimingGroup, TimingRecord};
