//! Threshold grids and metric-driven threshold selection.

use crate::error::{FdeError, Result};
use crate::measurement::FdeMethod;

/// `n` log-evenly spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && n >= 2, "invalid log grid");
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| {
            if i == n - 1 {
                hi
            } else {
                (a + (b - a) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

/// Fixed threshold ranges sized for recorded receiver data. The EDM range
/// sits far above the statistics the built-in simulator produces.
pub fn published_grid(method: FdeMethod) -> Vec<f64> {
    match method {
        FdeMethod::Edm => log_grid(0.45, 0.65, 17),
        FdeMethod::Edm2021 => log_grid(0.3, 300.0, 13),
        FdeMethod::Residual => log_grid(10.0, 1e5, 13),
        FdeMethod::Ss => log_grid(1.0, 100.0, 9),
    }
}

/// Ranges that span the statistics produced by the built-in simulator
/// (10 m noise, meter-scale ECEF coordinates).
pub fn simulation_grid(method: FdeMethod) -> Vec<f64> {
    match method {
        FdeMethod::Edm => log_grid(1e-9, 1e-5, 25),
        FdeMethod::Edm2021 => log_grid(1e-3, 1e3, 25),
        FdeMethod::Residual => log_grid(1.0, 1e6, 25),
        FdeMethod::Ss => log_grid(1.0, 100.0, 9),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub threshold: f64,
    pub value: f64,
    /// Metric value at every grid point, in grid order.
    pub values: Vec<f64>,
}

/// Grid point minimizing `metric`; the lowest threshold wins ties. NaN
/// metric values never win.
pub fn calibrate_threshold(grid: &[f64], mut metric: impl FnMut(f64) -> f64) -> Result<Calibration> {
    if grid.len() < 2 {
        return Err(FdeError::InvalidArgument("calibration needs at least two grid points".into()));
    }
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by(|&a, &b| grid[a].total_cmp(&grid[b]));
    let values: Vec<f64> = grid.iter().map(|&t| metric(t)).collect();
    let mut best: Option<usize> = None;
    for &i in &order {
        if values[i].is_nan() {
            continue;
        }
        if best.is_none_or(|b| values[i] < values[b]) {
            best = Some(i);
        }
    }
    let b = best.ok_or_else(|| FdeError::InvalidArgument("metric undefined on every grid point".into()))?;
    Ok(Calibration {
        threshold: grid[b],
        value: values[b],
        values,
    })
}
