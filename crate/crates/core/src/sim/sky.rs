//! Single random epochs with a uniform sky, for property tests and
//! acceptance runs that need many independent geometries quickly.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::rng::{keyed_stream, Purpose};
use crate::geodesy::{distance, Geodetic};
use crate::measurement::{EpochSet, Measurement};

const SKY_RADIUS_M: f64 = 26_560_000.0;
const MIN_ELEVATION_DEG: f64 = 5.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SkyEpochSpec {
    pub satellites: usize,
    pub noise_sigma_m: f64,
    /// (measurement index, bias in meters)
    pub faults: Vec<(usize, f64)>,
    /// Receiver clock bias added to every raw pseudorange.
    pub rx_clock_bias_m: f64,
}

impl SkyEpochSpec {
    pub fn noiseless(satellites: usize) -> Self {
        Self::noisy(satellites, 0.0)
    }

    pub fn noisy(satellites: usize, noise_sigma_m: f64) -> Self {
        Self {
            satellites,
            noise_sigma_m,
            faults: Vec::new(),
            rx_clock_bias_m: 0.0,
        }
    }

    pub fn with_fault(mut self, index: usize, bias_m: f64) -> Self {
        self.faults.push((index, bias_m));
        self
    }
}

/// Receiver at a random point on the ellipsoid, satellites spread uniformly
/// over the sky above 5° elevation at GPS orbit radius.
pub fn random_sky_epoch(seed: u64, spec: &SkyEpochSpec) -> EpochSet {
    let mut geo = keyed_stream(seed, u64::MAX, 0, Purpose::Geometry);
    let rx = Geodetic::new(
        geo.random_range(-70.0..70.0),
        geo.random_range(-180.0..180.0),
        geo.random_range(0.0..2000.0),
    );
    let origin = rx.to_ecef();
    let basis = rx.enu_basis();
    let min_sin = MIN_ELEVATION_DEG.to_radians().sin();

    let mut noise_rng = keyed_stream(seed, u64::MAX, 0, Purpose::Noise);
    let weight = if spec.noise_sigma_m > 0.0 {
        1.0 / (spec.noise_sigma_m * spec.noise_sigma_m)
    } else {
        1.0
    };
    let noise = Normal::new(0.0, spec.noise_sigma_m.max(0.0)).expect("finite sigma");

    let measurements = (0..spec.satellites)
        .map(|i| {
            let az: f64 = geo.random_range(0.0..std::f64::consts::TAU);
            let sin_el: f64 = geo.random_range(min_sin..1.0);
            let cos_el = (1.0 - sin_el * sin_el).sqrt();
            let enu = [cos_el * az.sin(), cos_el * az.cos(), sin_el];
            let u: [f64; 3] = std::array::from_fn(|k| (0..3).map(|r| enu[r] * basis[r][k]).sum());
            // Range t solving |origin + t·u| = R.
            let b = crate::geodesy::dot3(&origin, &u);
            let c = crate::geodesy::dot3(&origin, &origin) - SKY_RADIUS_M * SKY_RADIUS_M;
            let t = -b + (b * b - c).sqrt();
            let pos = [origin[0] + t * u[0], origin[1] + t * u[1], origin[2] + t * u[2]];

            let mut pr = distance(&origin, &pos) + spec.rx_clock_bias_m;
            if spec.noise_sigma_m > 0.0 {
                pr += noise.sample(&mut noise_rng);
            }
            let bias: f64 = spec.faults.iter().filter(|f| f.0 == i).map(|f| f.1).sum();
            pr += bias;
            let mut m = Measurement::corrected(format!("S{:02}", i + 1), pos, pr, weight);
            m.constellation = "SKY".into();
            m.truth_fault = Some(bias != 0.0);
            m
        })
        .collect();

    let mut epoch = EpochSet::new(format!("sky-{seed}"), 0.0, measurements);
    epoch.truth_rx_pos = Some(origin);
    epoch
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometry_is_above_mask_and_on_shell() {
        for seed in 0..10 {
            let e = random_sky_epoch(seed, &SkyEpochSpec::noiseless(20));
            let truth = e.truth_rx_pos.unwrap();
            let rx = Geodetic::from_ecef(&truth);
            for m in &e.measurements {
                assert!((crate::linalg::norm(&m.sat_pos) - SKY_RADIUS_M).abs() < 1e-3);
                assert!(rx.elevation_deg(&m.sat_pos) >= MIN_ELEVATION_DEG - 1e-6);
                m.validate().unwrap();
            }
        }
    }

    #[test]
    fn faults_are_labelled() {
        let e = random_sky_epoch(1, &SkyEpochSpec::noiseless(8).with_fault(3, 100.0));
        let labels = e.truth_labels().unwrap();
        assert_eq!(labels.iter().position(|&f| f), Some(3));
        assert_eq!(labels.iter().filter(|&&f| f).count(), 1);
    }

    #[test]
    fn same_seed_same_sky_regardless_of_noise() {
        let a = random_sky_epoch(9, &SkyEpochSpec::noiseless(10));
        let b = random_sky_epoch(9, &SkyEpochSpec::noisy(10, 10.0));
        assert_eq!(a.sat_positions(), b.sat_positions());
    }
}
