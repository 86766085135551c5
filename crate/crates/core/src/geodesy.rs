//! WGS-84 geodetic conversions and local East-North-Up frames.

use serde::{Deserialize, Serialize};

pub const WGS84_A: f64 = 6_378_137.0;
pub const WGS84_F: f64 = 1.0 / 298.257_223_563;
pub const WGS84_E2: f64 = WGS84_F * (2.0 - WGS84_F);

pub type Ecef = [f64; 3];

/// Geodetic coordinates: latitude and longitude in degrees, altitude in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Geodetic {
    pub lat_deg: f64,
    pub lon_deg: f64,
    pub alt_m: f64,
}

impl Geodetic {
    pub fn new(lat_deg: f64, lon_deg: f64, alt_m: f64) -> Self {
        Self {
            lat_deg,
            lon_deg,
            alt_m,
        }
    }

    pub fn to_ecef(&self) -> Ecef {
        let (lat, lon) = (self.lat_deg.to_radians(), self.lon_deg.to_radians());
        let n = WGS84_A / (1.0 - WGS84_E2 * lat.sin().powi(2)).sqrt();
        [
            (n + self.alt_m) * lat.cos() * lon.cos(),
            (n + self.alt_m) * lat.cos() * lon.sin(),
            (n * (1.0 - WGS84_E2) + self.alt_m) * lat.sin(),
        ]
    }

    /// Iterative inversion; converges to sub-millimeter within a handful of
    /// iterations for terrestrial points.
    pub fn from_ecef(p: &Ecef) -> Self {
        let lon = p[1].atan2(p[0]);
        let rho = (p[0] * p[0] + p[1] * p[1]).sqrt();
        let mut lat = p[2].atan2(rho * (1.0 - WGS84_E2));
        let mut alt = 0.0;
        for _ in 0..10 {
            let n = WGS84_A / (1.0 - WGS84_E2 * lat.sin().powi(2)).sqrt();
            alt = if lat.cos().abs() > 1e-10 {
                rho / lat.cos() - n
            } else {
                p[2].abs() - n * (1.0 - WGS84_E2)
            };
            let next = p[2].atan2(rho * (1.0 - WGS84_E2 * n / (n + alt)));
            let done = (next - lat).abs() < 1e-14;
            lat = next;
            if done {
                break;
            }
        }
        Self::new(lat.to_degrees(), lon.to_degrees(), alt)
    }

    /// Rows are the East, North and Up unit vectors expressed in ECEF.
    pub fn enu_basis(&self) -> [[f64; 3]; 3] {
        let (lat, lon) = (self.lat_deg.to_radians(), self.lon_deg.to_radians());
        let (sl, cl) = lat.sin_cos();
        let (so, co) = lon.sin_cos();
        [
            [-so, co, 0.0],
            [-sl * co, -sl * so, cl],
            [cl * co, cl * so, sl],
        ]
    }

    /// ENU components of the ECEF difference `target − origin`, where `self`
    /// is the geodetic position of the origin.
    pub fn enu(&self, origin: &Ecef, target: &Ecef) -> [f64; 3] {
        let d = sub(target, origin);
        let b = self.enu_basis();
        [dot3(&b[0], &d), dot3(&b[1], &d), dot3(&b[2], &d)]
    }

    /// Elevation of `target` above the local horizon of `self`, in degrees.
    pub fn elevation_deg(&self, target: &Ecef) -> f64 {
        let origin = self.to_ecef();
        let [e, n, u] = self.enu(&origin, target);
        let r = (e * e + n * n + u * u).sqrt();
        (u / r).clamp(-1.0, 1.0).asin().to_degrees()
    }
}

/// Horizontal (East/North) distance between an estimate and the truth, in the
/// truth's local frame.
pub fn horizontal_error(estimate: &Ecef, truth: &Ecef) -> f64 {
    let g = Geodetic::from_ecef(truth);
    let [e, n, _] = g.enu(truth, estimate);
    e.hypot(n)
}

pub(crate) fn sub(a: &Ecef, b: &Ecef) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn distance(a: &Ecef, b: &Ecef) -> f64 {
    let d = sub(a, b);
    dot3(&d, &d).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ecef_round_trip() {
        for &(lat, lon, alt) in &[
            (51.0447, -114.0719, 1045.0),
            (-33.9249, 18.4241, 10.0),
            (0.0, 0.0, 0.0),
            (89.9, 45.0, 100.0),
        ] {
            let g = Geodetic::new(lat, lon, alt);
            let back = Geodetic::from_ecef(&g.to_ecef());
            assert!((back.lat_deg - lat).abs() < 1e-9);
            assert!((back.lon_deg - lon).abs() < 1e-9);
            assert!((back.alt_m - alt).abs() < 1e-4);
        }
    }

    #[test]
    fn zenith_is_ninety_degrees() {
        let g = Geodetic::new(48.1, 11.6, 500.0);
        let p = g.to_ecef();
        let up = g.enu_basis()[2];
        let sat = [p[0] + 2e7 * up[0], p[1] + 2e7 * up[1], p[2] + 2e7 * up[2]];
        assert!((g.elevation_deg(&sat) - 90.0).abs() < 1e-9);
    }

    #[test]
    fn horizontal_error_ignores_up() {
        let truth = Geodetic::new(37.4, -122.1, 20.0);
        let t = truth.to_ecef();
        let b = truth.enu_basis();
        let est = [
            t[0] + 3.0 * b[0][0] + 4.0 * b[1][0] + 50.0 * b[2][0],
            t[1] + 3.0 * b[0][1] + 4.0 * b[1][1] + 50.0 * b[2][1],
            t[2] + 3.0 * b[0][2] + 4.0 * b[1][2] + 50.0 * b[2][2],
        ];
        assert!((horizontal_error(&est, &t) - 5.0).abs() < 1e-6);
    }
}
