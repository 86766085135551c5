//! Weighted least-squares positioning with chi-square detection and greedy
//! largest-normalized-residual exclusion.

use crate::clock::Stopwatch;
use crate::error::{FdeError, Result};
use crate::geodesy::{distance, Ecef};
use crate::linalg::{spd_inverse, weighted_normal_equations, weighted_normal_solve, Matrix};
use crate::measurement::{EpochSet, FdeMethod, FdeResult};

pub const WLS_MAX_ITERATIONS: usize = 20;
/// Gauss-Newton stops once the state update is shorter than this, meters.
pub const WLS_STEP_TOLERANCE: f64 = 1e-4;
/// Measurements whose leverage leaves less than this in the denominator are
/// skipped by the normalized-residual test.
pub const LEVERAGE_GUARD: f64 = 1e-12;
const MIN_MEASUREMENTS: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct WlsSolution {
    pub rx_pos: Ecef,
    pub rx_clock_bias: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `ρ − ‖X_r − X_sv‖ − b` at the final state.
    pub residuals: Vec<f64>,
}

/// Unit line-of-sight rows `(X_r − X_sv)/‖X_r − X_sv‖`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometryMatrix(Vec<[f64; 3]>);

impl GeometryMatrix {
    pub fn new(rx: &Ecef, sats: &[Ecef]) -> Self {
        Self(
            sats.iter()
                .map(|s| {
                    let d = [rx[0] - s[0], rx[1] - s[1], rx[2] - s[2]];
                    let r = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
                    [d[0] / r, d[1] / r, d[2] / r]
                })
                .collect(),
        )
    }

    pub fn rows(&self) -> &[[f64; 3]] {
        &self.0
    }

    pub fn to_matrix(&self) -> Matrix {
        Matrix::from_fn(self.0.len(), 3, |i, j| self.0[i][j])
    }

    /// Same rows plus a ones column for the clock state.
    pub fn with_clock_column(&self) -> Matrix {
        Matrix::from_fn(self.0.len(), 4, |i, j| if j < 3 { self.0[i][j] } else { 1.0 })
    }
}

fn residuals(rx: &Ecef, b: f64, sats: &[Ecef], ranges: &[f64]) -> Vec<f64> {
    sats.iter()
        .zip(ranges)
        .map(|(s, r)| r - distance(rx, s) - b)
        .collect()
}

/// Gauss-Newton on `(x, y, z, b)` from `init` (default: ECEF origin, zero clock).
pub fn wls_position(sats: &[Ecef], ranges: &[f64], weights: &[f64], init: Option<[f64; 4]>) -> Result<WlsSolution> {
    if sats.len() < MIN_MEASUREMENTS {
        return Err(FdeError::TooFewMeasurements {
            got: sats.len(),
            need: MIN_MEASUREMENTS,
        });
    }
    let mut state = init.unwrap_or([0.0; 4]);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < WLS_MAX_ITERATIONS {
        let rx = [state[0], state[1], state[2]];
        let jac = GeometryMatrix::new(&rx, sats).with_clock_column();
        let r = residuals(&rx, state[3], sats, ranges);
        let step = weighted_normal_solve(&jac, weights, &r)?;
        iterations += 1;
        for k in 0..4 {
            state[k] += step[k];
        }
        if crate::linalg::norm(&step) < WLS_STEP_TOLERANCE {
            converged = true;
            break;
        }
    }
    let rx = [state[0], state[1], state[2]];
    Ok(WlsSolution {
        rx_pos: rx,
        rx_clock_bias: state[3],
        iterations,
        converged,
        residuals: residuals(&rx, state[3], sats, ranges),
    })
}

/// WLS on an epoch's conditioned pseudoranges.
pub fn wls_solve(epoch: &EpochSet, init: Option<[f64; 4]>) -> Result<WlsSolution> {
    wls_position(
        &epoch.sat_positions(),
        &epoch.conditioned_pseudoranges(),
        &epoch.weights(),
        init,
    )
}

/// Columns of the geometry matrix used by the chi-square and
/// normalized-residual tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TestGeometry {
    /// Unit line-of-sight vectors only, three columns.
    #[default]
    LineOfSight,
    /// Line-of-sight vectors plus the clock column, matching the WLS Jacobian.
    WithClock,
}

struct Projection {
    g: Matrix,
    /// `(GᵀWG)⁻¹`
    cov: Matrix,
}

impl Projection {
    fn new(rx: &Ecef, sats: &[Ecef], w: &[f64], geometry: TestGeometry) -> Result<Self> {
        let los = GeometryMatrix::new(rx, sats);
        let g = match geometry {
            TestGeometry::LineOfSight => los.to_matrix(),
            TestGeometry::WithClock => los.with_clock_column(),
        };
        let (n, _) = weighted_normal_equations(&g, w, &vec![0.0; sats.len()]);
        let cov = spd_inverse(&n)?;
        Ok(Self { g, cov })
    }

    /// `(GᵀWG)⁻¹ GᵀW R`
    fn fit(&self, w: &[f64], r: &[f64]) -> Vec<f64> {
        let p = self.g.cols();
        let mut gtwr = vec![0.0; p];
        for i in 0..self.g.rows() {
            let row = self.g.row(i);
            for k in 0..p {
                gtwr[k] += row[k] * w[i] * r[i];
            }
        }
        self.cov.matvec(&gtwr)
    }

    fn predicted(&self, i: usize, x: &[f64]) -> f64 {
        crate::linalg::dot(self.g.row(i), x)
    }

    fn leverage(&self, i: usize, w: f64) -> f64 {
        let g = self.g.row(i);
        w * crate::linalg::dot(g, &self.cov.matvec(g))
    }
}

fn check_aligned(sats: &[Ecef], r: &[f64], w: &[f64]) -> Result<()> {
    if sats.len() != r.len() || sats.len() != w.len() {
        return Err(FdeError::InvalidArgument(format!(
            "{} satellites, {} residuals, {} weights",
            sats.len(),
            r.len(),
            w.len()
        )));
    }
    Ok(())
}

/// `Rᵀ(W − WG(GᵀWG)⁻¹GᵀW)R` with the three-column geometry matrix.
pub fn chi_square_statistic(rx: &Ecef, sats: &[Ecef], r: &[f64], w: &[f64]) -> Result<f64> {
    chi_square_statistic_with(rx, sats, r, w, TestGeometry::LineOfSight)
}

pub fn chi_square_statistic_with(rx: &Ecef, sats: &[Ecef], r: &[f64], w: &[f64], geometry: TestGeometry) -> Result<f64> {
    check_aligned(sats, r, w)?;
    let p = Projection::new(rx, sats, w, geometry)?;
    let x = p.fit(w, r);
    let weighted: f64 = r.iter().zip(w).map(|(ri, wi)| wi * ri * ri).sum();
    let explained: f64 = (0..sats.len()).map(|i| w[i] * r[i] * p.predicted(i, &x)).sum();
    Ok(weighted - explained)
}

/// `w_i (r_i − g_iᵀx̃)² / (1 − w_i g_iᵀ(GᵀWG)⁻¹g_i)` per measurement; `None`
/// where the denominator is at most [`LEVERAGE_GUARD`].
pub fn normalized_residuals(rx: &Ecef, sats: &[Ecef], r: &[f64], w: &[f64]) -> Result<Vec<Option<f64>>> {
    normalized_residuals_with(rx, sats, r, w, TestGeometry::LineOfSight)
}

pub fn normalized_residuals_with(
    rx: &Ecef,
    sats: &[Ecef],
    r: &[f64],
    w: &[f64],
    geometry: TestGeometry,
) -> Result<Vec<Option<f64>>> {
    check_aligned(sats, r, w)?;
    let p = Projection::new(rx, sats, w, geometry)?;
    let x = p.fit(w, r);
    Ok((0..sats.len())
        .map(|i| {
            let denom = 1.0 - p.leverage(i, w[i]);
            if denom <= LEVERAGE_GUARD {
                return None;
            }
            let e = r[i] - p.predicted(i, &x);
            Some(w[i] * e * e / denom)
        })
        .collect())
}

/// Index of the largest normalized residual. Values within a relative 1e-12
/// of the maximum count as tied and resolve to the lowest index.
pub fn largest_normalized_residual(rx: &Ecef, sats: &[Ecef], r: &[f64], w: &[f64]) -> Result<usize> {
    largest_normalized_residual_with(rx, sats, r, w, TestGeometry::LineOfSight)
}

pub fn largest_normalized_residual_with(
    rx: &Ecef,
    sats: &[Ecef],
    r: &[f64],
    w: &[f64],
    geometry: TestGeometry,
) -> Result<usize> {
    if sats.len() < MIN_MEASUREMENTS + 1 {
        return Err(FdeError::TooFewMeasurements {
            got: sats.len(),
            need: MIN_MEASUREMENTS + 1,
        });
    }
    let scores = normalized_residuals_with(rx, sats, r, w, geometry)?;
    let best = scores
        .iter()
        .flatten()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    if best == f64::NEG_INFINITY {
        return Err(FdeError::InsufficientDimension(
            "every measurement has unit leverage".into(),
        ));
    }
    let tie = best - best.abs() * 1e-12;
    Ok(scores
        .iter()
        .position(|s| s.is_some_and(|v| v >= tie))
        .expect("maximum is attained"))
}

/// Greedy residual FDE: solve, test χ², drop the largest normalized residual,
/// repeat while χ² exceeds `threshold` and more than four measurements remain.
pub fn greedy_residual_fde(epoch: &EpochSet, threshold: f64) -> Result<FdeResult> {
    greedy_residual_fde_with(epoch, threshold, &ResidualOptions::default())
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ResidualOptions {
    /// Stop after this many exclusions.
    pub max_faults: Option<usize>,
    pub geometry: TestGeometry,
}

pub fn greedy_residual_fde_with(epoch: &EpochSet, threshold: f64, opts: &ResidualOptions) -> Result<FdeResult> {
    let max_faults = opts.max_faults;
    if !(threshold > 0.0) {
        return Err(FdeError::InvalidArgument(format!(
            "threshold must be positive, got {threshold}"
        )));
    }
    if epoch.len() < MIN_MEASUREMENTS {
        return Err(FdeError::TooFewMeasurements {
            got: epoch.len(),
            need: MIN_MEASUREMENTS,
        });
    }
    let mut result = FdeResult::new(FdeMethod::Residual, epoch);
    let timer = Stopwatch::start();

    let all_pos = epoch.sat_positions();
    let all_ranges = epoch.conditioned_pseudoranges();
    let all_w = epoch.weights();
    let mut active: Vec<usize> = (0..epoch.len()).collect();

    let evaluate = |active: &[usize]| -> Result<(WlsSolution, Vec<Ecef>, Vec<f64>, f64)> {
        let pos: Vec<Ecef> = active.iter().map(|&i| all_pos[i]).collect();
        let ranges: Vec<f64> = active.iter().map(|&i| all_ranges[i]).collect();
        let w: Vec<f64> = active.iter().map(|&i| all_w[i]).collect();
        let sol = wls_position(&pos, &ranges, &w, None)?;
        let chi2 = chi_square_statistic_with(&sol.rx_pos, &pos, &sol.residuals, &w, opts.geometry)?;
        Ok((sol, pos, w, chi2))
    };

    let mut state = match evaluate(&active) {
        Ok(s) => s,
        Err(FdeError::SingularGeometry { .. }) => {
            result.converged = false;
            result.wall_time_s = timer.elapsed_s();
            return Ok(result);
        }
        Err(e) => return Err(e),
    };
    result.converged &= state.0.converged;
    result.statistic_trace.push(state.3);

    while state.3 > threshold
        && active.len() > MIN_MEASUREMENTS
        && max_faults.is_none_or(|f| result.exclusion_order.len() < f)
    {
        let (sol, pos, w, _) = &state;
        let worst = match largest_normalized_residual_with(&sol.rx_pos, pos, &sol.residuals, w, opts.geometry) {
            Ok(i) => i,
            Err(FdeError::SingularGeometry { .. } | FdeError::InsufficientDimension(_)) => {
                result.converged = false;
                break;
            }
            Err(e) => return Err(e),
        };
        result.exclude(active.remove(worst));
        state = match evaluate(&active) {
            Ok(s) => s,
            Err(FdeError::SingularGeometry { .. }) => {
                result.converged = false;
                break;
            }
            Err(e) => return Err(e),
        };
        result.converged &= state.0.converged;
        result.statistic_trace.push(state.3);
    }

    result.wall_time_s = timer.elapsed_s();
    Ok(result)
}

/// Dilution-of-precision figures for unit weights at `rx`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dop {
    pub gdop: f64,
    pub pdop: f64,
}

pub fn dilution_of_precision(rx: &Ecef, sats: &[Ecef]) -> Result<Dop> {
    let h = GeometryMatrix::new(rx, sats).with_clock_column();
    let (n, _) = weighted_normal_equations(&h, &vec![1.0; sats.len()], &vec![0.0; sats.len()]);
    let q = spd_inverse(&n)?;
    Ok(Dop {
        gdop: q.trace().sqrt(),
        pdop: (q[(0, 0)] + q[(1, 1)] + q[(2, 2)]).sqrt(),
    })
}
