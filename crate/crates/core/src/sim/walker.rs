//! Circular Walker-delta constellations propagated with two-body motion.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::geodesy::{Ecef, Geodetic};

/// Earth gravitational parameter, m³/s².
pub const MU_EARTH: f64 = 3.986_004_418e14;
/// Earth rotation rate, rad/s.
pub const OMEGA_EARTH: f64 = 7.292_115_146_7e-5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkerSpec {
    /// Constellation label written to the measurement CSV.
    pub name: String,
    /// Prefix for generated satellite ids, e.g. `G` gives `G01`, `G02`, ...
    pub sv_prefix: String,
    pub total_sats: usize,
    pub planes: usize,
    pub phasing: usize,
    pub inclination_deg: f64,
    pub orbit_radius_m: f64,
    #[serde(default)]
    pub epoch_raan_deg: f64,
}

impl WalkerSpec {
    pub fn gps_like() -> Self {
        Self::new("GPS", "G", 30, 6, 1, 55.0, 26_560_000.0)
    }

    pub fn glonass_like() -> Self {
        Self::new("GLONASS", "R", 24, 3, 1, 64.8, 25_510_000.0)
    }

    pub fn galileo_like() -> Self {
        Self::new("Galileo", "E", 24, 3, 1, 56.0, 29_600_000.0)
    }

    pub fn beidou_meo_like() -> Self {
        Self::new("BeiDou", "C", 24, 3, 1, 55.0, 27_906_000.0)
    }

    /// The four-shell default used by scenario configs.
    pub fn default_set() -> Vec<Self> {
        vec![
            Self::gps_like(),
            Self::glonass_like(),
            Self::galileo_like(),
            Self::beidou_meo_like(),
        ]
    }

    pub fn new(
        name: &str,
        sv_prefix: &str,
        total_sats: usize,
        planes: usize,
        phasing: usize,
        inclination_deg: f64,
        orbit_radius_m: f64,
    ) -> Self {
        Self {
            name: name.into(),
            sv_prefix: sv_prefix.into(),
            total_sats,
            planes,
            phasing,
            inclination_deg,
            orbit_radius_m,
            epoch_raan_deg: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.planes == 0 || self.total_sats == 0 {
            return Err(format!("{}: needs at least one plane and satellite", self.name));
        }
        if !self.total_sats.is_multiple_of(self.planes) {
            return Err(format!(
                "{}: {} satellites do not divide into {} planes",
                self.name, self.total_sats, self.planes
            ));
        }
        if !(self.orbit_radius_m > 0.0) {
            return Err(format!("{}: orbit radius must be positive", self.name));
        }
        Ok(())
    }

    pub fn mean_motion(&self) -> f64 {
        (MU_EARTH / self.orbit_radius_m.powi(3)).sqrt()
    }

    pub fn period_s(&self) -> f64 {
        TAU / self.mean_motion()
    }

    pub fn sv_id(&self, index: usize) -> String {
        format!("{}{:02}", self.sv_prefix, index + 1)
    }
}

/// Inertial positions at `t` seconds, plane-major order.
pub fn propagate_inertial(spec: &WalkerSpec, t: f64) -> Vec<[f64; 3]> {
    let per_plane = spec.total_sats / spec.planes.max(1);
    let a = spec.orbit_radius_m;
    let (si, ci) = spec.inclination_deg.to_radians().sin_cos();
    let n = spec.mean_motion();
    let mut out = Vec::with_capacity(spec.total_sats);
    for j in 0..spec.planes {
        let raan = spec.epoch_raan_deg.to_radians() + TAU * j as f64 / spec.planes as f64;
        let (so, co) = raan.sin_cos();
        for k in 0..per_plane {
            let u = TAU * k as f64 / per_plane as f64
                + TAU * (spec.phasing * j) as f64 / spec.total_sats as f64
                + n * t;
            let (su, cu) = u.sin_cos();
            let (x, y, z) = (a * cu, a * su * ci, a * su * si);
            out.push([co * x - so * y, so * x + co * y, z]);
        }
    }
    out
}

/// Rotates an inertial vector into the Earth-fixed frame at `t`.
pub fn inertial_to_ecef(p: &[f64; 3], t: f64) -> Ecef {
    let (s, c) = (OMEGA_EARTH * t).sin_cos();
    [c * p[0] + s * p[1], -s * p[0] + c * p[1], p[2]]
}

pub fn propagate_constellation(spec: &WalkerSpec, t: f64) -> Vec<Ecef> {
    propagate_inertial(spec, t)
        .iter()
        .map(|p| inertial_to_ecef(p, t))
        .collect()
}

/// Indexes of satellites at or above `mask_deg` elevation.
pub fn visible_satellites(rx: &Geodetic, sats: &[Ecef], mask_deg: f64) -> Vec<usize> {
    sats.iter()
        .enumerate()
        .filter(|(_, s)| rx.elevation_deg(s) >= mask_deg)
        .map(|(i, _)| i)
        .collect()
}
