//! Measurement containers shared by every FDE method.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{FdeError, Result};
use crate::geodesy::Ecef;

/// One pseudorange with the satellite state needed to condition it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub sv_id: String,
    pub constellation: String,
    pub sat_pos: Ecef,
    /// Satellite clock bias, meters.
    pub sat_clock_bias: f64,
    pub pseudorange_raw: f64,
    pub iono_delay: f64,
    pub tropo_delay: f64,
    pub constellation_bias: f64,
    /// Inverse variance, 1/m².
    pub weight: f64,
    pub multipath: Option<bool>,
    pub truth_fault: Option<bool>,
}

impl Measurement {
    /// A measurement that is already corrected: every bias term is zero.
    pub fn corrected(sv_id: impl Into<String>, sat_pos: Ecef, pseudorange: f64, weight: f64) -> Self {
        Self {
            sv_id: sv_id.into(),
            constellation: String::new(),
            sat_pos,
            sat_clock_bias: 0.0,
            pseudorange_raw: pseudorange,
            iono_delay: 0.0,
            tropo_delay: 0.0,
            constellation_bias: 0.0,
            weight,
            multipath: None,
            truth_fault: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let sat_norm = crate::linalg::norm(&self.sat_pos);
        if !(self.pseudorange_raw > 0.0) {
            return Err(FdeError::InvalidArgument(format!(
                "{}: pseudorange must be positive",
                self.sv_id
            )));
        }
        if !(self.weight > 0.0) {
            return Err(FdeError::InvalidArgument(format!(
                "{}: weight must be positive",
                self.sv_id
            )));
        }
        if !(2.0e7..=5.0e7).contains(&sat_norm) {
            return Err(FdeError::InvalidArgument(format!(
                "{}: satellite radius {sat_norm:.0} m outside [2e7, 5e7]",
                self.sv_id
            )));
        }
        Ok(())
    }
}

/// All measurements sharing one timestamp.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochSet {
    pub trace_id: String,
    pub timestamp: f64,
    pub measurements: Vec<Measurement>,
    /// Receiver clock bias used when conditioning, meters.
    pub rx_clock_bias_est: Option<f64>,
    pub truth_rx_pos: Option<Ecef>,
}

impl EpochSet {
    pub fn new(trace_id: impl Into<String>, timestamp: f64, measurements: Vec<Measurement>) -> Self {
        Self {
            trace_id: trace_id.into(),
            timestamp,
            measurements,
            rx_clock_bias_est: None,
            truth_rx_pos: None,
        }
    }

    pub fn len(&self) -> usize {
        self.measurements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.measurements.is_empty()
    }

    pub fn check_unique_ids(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for m in &self.measurements {
            if !seen.insert(m.sv_id.as_str()) {
                return Err(FdeError::InvalidArgument(format!(
                    "duplicate sv_id {} at t={}",
                    m.sv_id, self.timestamp
                )));
            }
        }
        Ok(())
    }

    /// Conditioned pseudoranges using the epoch's clock estimate (zero if absent).
    pub fn conditioned_pseudoranges(&self) -> Vec<f64> {
        let clock = self.rx_clock_bias_est.unwrap_or(0.0);
        self.measurements
            .iter()
            .map(|m| condition_pseudorange(m, clock))
            .collect()
    }

    pub fn sat_positions(&self) -> Vec<Ecef> {
        self.measurements.iter().map(|m| m.sat_pos).collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.measurements.iter().map(|m| m.weight).collect()
    }

    pub fn truth_labels(&self) -> Option<Vec<bool>> {
        self.measurements.iter().map(|m| m.truth_fault).collect()
    }

    /// Copy keeping only the measurements whose flag is `false`.
    pub fn retain_unflagged(&self, flags: &[bool]) -> EpochSet {
        let mut out = self.clone();
        out.measurements = self
            .measurements
            .iter()
            .zip(flags)
            .filter(|(_, &f)| !f)
            .map(|(m, _)| m.clone())
            .collect();
        out
    }
}

/// Removes known biases from a raw pseudorange:
/// `ρ = ρ_m + b_rx − I + T − c_b`, plus the satellite clock bias so that the
/// result approximates the geometric range.
pub fn condition_pseudorange(meas: &Measurement, rx_clock_bias: f64) -> f64 {
    meas.pseudorange_raw + rx_clock_bias - meas.iono_delay + meas.tropo_delay
        - meas.constellation_bias
        + meas.sat_clock_bias
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FdeMethod {
    Edm,
    Edm2021,
    Residual,
    Ss,
}

impl FdeMethod {
    pub const ALL: [FdeMethod; 4] = [Self::Edm, Self::Edm2021, Self::Residual, Self::Ss];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Edm => "edm",
            Self::Edm2021 => "edm2021",
            Self::Residual => "residual",
            Self::Ss => "ss",
        }
    }
}

impl fmt::Display for FdeMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for FdeMethod {
    type Err = FdeError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| FdeError::InvalidArgument(format!("unknown method '{s}'")))
    }
}

/// Outcome of one FDE call on one epoch.
///
/// `flags` and `measurement` order follow the input epoch. `exclusion_order`
/// lists measurement indexes in the order they were removed.
#[derive(Debug, Clone, PartialEq)]
pub struct FdeResult {
    pub method: FdeMethod,
    pub sv_ids: Vec<String>,
    pub flags: Vec<bool>,
    pub exclusion_order: Vec<usize>,
    /// Detection statistic computed before each exclusion round and once
    /// after the last one.
    pub statistic_trace: Vec<f64>,
    /// `false` when the underlying estimator failed (singular geometry) and
    /// exclusion stopped early.
    pub converged: bool,
    pub wall_time_s: f64,
}

impl FdeResult {
    pub(crate) fn new(method: FdeMethod, epoch: &EpochSet) -> Self {
        Self {
            method,
            sv_ids: epoch.measurements.iter().map(|m| m.sv_id.clone()).collect(),
            flags: vec![false; epoch.len()],
            exclusion_order: Vec::new(),
            statistic_trace: Vec::new(),
            converged: true,
            wall_time_s: 0.0,
        }
    }

    pub fn flag_count(&self) -> usize {
        self.flags.iter().filter(|&&f| f).count()
    }

    pub fn excluded_ids(&self) -> Vec<&str> {
        self.exclusion_order
            .iter()
            .map(|&i| self.sv_ids[i].as_str())
            .collect()
    }

    /// Rank of each measurement in the exclusion order (1-based), if flagged.
    pub fn exclusion_rank(&self, index: usize) -> Option<usize> {
        self.exclusion_order
            .iter()
            .position(|&i| i == index)
            .map(|p| p + 1)
    }

    pub fn final_statistic(&self) -> Option<f64> {
        self.statistic_trace.last().copied()
    }

    pub(crate) fn exclude(&mut self, index: usize) {
        debug_assert!(!self.flags[index]);
        self.flags[index] = true;
        self.exclusion_order.push(index);
    }
}
