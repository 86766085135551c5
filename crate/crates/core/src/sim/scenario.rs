//! Scenario configuration and epoch synthesis.

use rand::seq::index::sample;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::rng::{keyed_stream, Purpose};
use super::walker::{propagate_constellation, WalkerSpec};
use crate::error::{FdeError, Result};
use crate::geodesy::{distance, Ecef, Geodetic};
use crate::measurement::{EpochSet, Measurement};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Location {
    pub name: String,
    pub lat_deg: f64,
    pub lon_deg: f64,
    #[serde(default)]
    pub alt_m: f64,
    pub elevation_mask_deg: f64,
}

impl Location {
    pub fn new(name: &str, lat_deg: f64, lon_deg: f64, alt_m: f64, elevation_mask_deg: f64) -> Self {
        Self {
            name: name.into(),
            lat_deg,
            lon_deg,
            alt_m,
            elevation_mask_deg,
        }
    }

    pub fn geodetic(&self) -> Geodetic {
        Geodetic::new(self.lat_deg, self.lon_deg, self.alt_m)
    }

    /// Nine cities; Calgary, London and Zurich use a 30° mask, the rest 10°.
    pub fn default_set() -> Vec<Self> {
        vec![
            Self::new("Calgary", 51.0447, -114.0719, 1045.0, 30.0),
            Self::new("CapeTown", -33.9249, 18.4241, 10.0, 10.0),
            Self::new("HongKong", 22.3193, 114.1694, 30.0, 10.0),
            Self::new("London", 51.5074, -0.1278, 20.0, 30.0),
            Self::new("Munich", 48.1351, 11.5820, 520.0, 10.0),
            Self::new("SaoPaulo", -23.5505, -46.6333, 760.0, 10.0),
            Self::new("SanFrancisco", 37.4292, -122.1690, 30.0, 10.0),
            Self::new("Sydney", -33.8688, 151.2093, 20.0, 10.0),
            Self::new("Zurich", 47.3769, 8.5417, 410.0, 30.0),
        ]
    }
}

/// Full description of a simulation sweep. Every field has a default, so an
/// empty TOML document describes the standard nine-city, 24 h sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub start_time_s: f64,
    pub epoch_interval_s: f64,
    pub duration_h: f64,
    pub noise_sigma_m: f64,
    pub fault_bias_m: f64,
    pub fault_count: usize,
    pub locations: Vec<Location>,
    pub constellations: Vec<WalkerSpec>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            start_time_s: 0.0,
            epoch_interval_s: 300.0,
            duration_h: 24.0,
            noise_sigma_m: 10.0,
            fault_bias_m: 60.0,
            fault_count: 8,
            locations: Location::default_set(),
            constellations: WalkerSpec::default_set(),
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(FdeError::Config(msg));
        if !(self.epoch_interval_s > 0.0) {
            return bad("epoch_interval_s must be positive".into());
        }
        if !(self.duration_h >= 0.0) {
            return bad("duration_h must be nonnegative".into());
        }
        if !(self.noise_sigma_m >= 0.0) {
            return bad("noise_sigma_m must be nonnegative".into());
        }
        if !self.fault_bias_m.is_finite() {
            return bad("fault_bias_m must be finite".into());
        }
        if self.locations.is_empty() {
            return bad("at least one location is required".into());
        }
        if self.constellations.is_empty() {
            return bad("at least one constellation is required".into());
        }
        for c in &self.constellations {
            c.validate().map_err(FdeError::Config)?;
        }
        Ok(())
    }

    /// Epochs per location: both ends of the span are included.
    pub fn epochs_per_location(&self) -> usize {
        (self.duration_h * 3600.0 / self.epoch_interval_s + 1e-9).floor() as usize + 1
    }

    pub fn epoch_time(&self, epoch: usize) -> f64 {
        self.start_time_s + epoch as f64 * self.epoch_interval_s
    }

    pub fn measurement_weight(&self) -> f64 {
        if self.noise_sigma_m > 0.0 {
            1.0 / (self.noise_sigma_m * self.noise_sigma_m)
        } else {
            1.0
        }
    }
}

/// Satellites in the sky at one instant: (sv_id, constellation, position).
pub(crate) type Sky = Vec<(String, String, Ecef)>;

pub(crate) fn sky_at(cfg: &ScenarioConfig, t: f64) -> Sky {
    cfg.constellations
        .iter()
        .flat_map(|c| {
            propagate_constellation(c, t)
                .into_iter()
                .enumerate()
                .map(move |(i, p)| (c.sv_id(i), c.name.clone(), p))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkippedEpoch {
    pub location: String,
    pub time_s: f64,
    pub visible: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EpochOutcome {
    Epoch(EpochSet),
    Skipped(SkippedEpoch),
}

/// Generates one epoch for `location` (index into `cfg.locations`) at
/// `epoch` (index into the sweep). Deterministic in (seed, location, epoch).
pub fn synthesize_epoch(cfg: &ScenarioConfig, location: usize, epoch: usize) -> EpochOutcome {
    synthesize_with_sky(cfg, location, epoch, &sky_at(cfg, cfg.epoch_time(epoch)))
}

pub(crate) fn synthesize_with_sky(cfg: &ScenarioConfig, location: usize, epoch: usize, sky: &Sky) -> EpochOutcome {
    let loc = &cfg.locations[location];
    let t = cfg.epoch_time(epoch);
    let rx = loc.geodetic();
    let rx_ecef = rx.to_ecef();
    let visible: Vec<&(String, String, Ecef)> = sky
        .iter()
        .filter(|(_, _, p)| rx.elevation_deg(p) >= loc.elevation_mask_deg)
        .collect();

    if visible.len() < 4 || visible.len() <= cfg.fault_count {
        log::warn!(
            "{} t={t}: {} visible satellites cannot host {} faults, epoch skipped",
            loc.name,
            visible.len(),
            cfg.fault_count
        );
        return EpochOutcome::Skipped(SkippedEpoch {
            location: loc.name.clone(),
            time_s: t,
            visible: visible.len(),
        });
    }

    let (l, e) = (location as u64, epoch as u64);
    let mut fault_rng = keyed_stream(cfg.seed, l, e, Purpose::FaultSubset);
    let mut faulty = vec![false; visible.len()];
    for i in sample(&mut fault_rng, visible.len(), cfg.fault_count) {
        faulty[i] = true;
    }

    let mut noise_rng = keyed_stream(cfg.seed, l, e, Purpose::Noise);
    let noise = Normal::new(0.0, cfg.noise_sigma_m).expect("validated sigma");
    let weight = cfg.measurement_weight();
    let measurements = visible
        .iter()
        .zip(&faulty)
        .map(|((id, constellation, pos), &fault)| {
            let mut pr = distance(&rx_ecef, pos);
            if cfg.noise_sigma_m > 0.0 {
                pr += noise.sample(&mut noise_rng);
            }
            if fault {
                pr += cfg.fault_bias_m;
            }
            let mut m = Measurement::corrected(id.clone(), *pos, pr, weight);
            m.constellation = constellation.clone();
            m.truth_fault = Some(fault);
            m
        })
        .collect();

    let mut out = EpochSet::new(loc.name.clone(), t, measurements);
    out.truth_rx_pos = Some(rx_ecef);
    EpochOutcome::Epoch(out)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SimulationOutput {
    pub epochs: Vec<EpochSet>,
    pub skipped: Vec<SkippedEpoch>,
}

/// Runs the full sweep: every location at every epoch, location-major.
pub fn simulate(cfg: &ScenarioConfig) -> Result<SimulationOutput> {
    cfg.validate()?;
    let n_epochs = cfg.epochs_per_location();
    let skies: Vec<Sky> = crate::par::map_range(n_epochs, |e| sky_at(cfg, cfg.epoch_time(e)));
    let jobs = cfg.locations.len() * n_epochs;
    let outcomes = crate::par::map_range(jobs, |job| {
        let (loc, epoch) = (job / n_epochs, job % n_epochs);
        synthesize_with_sky(cfg, loc, epoch, &skies[epoch])
    });
    let mut out = SimulationOutput::default();
    for o in outcomes {
        match o {
            EpochOutcome::Epoch(e) => out.epochs.push(e),
            EpochOutcome::Skipped(s) => out.skipped.push(s),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn short(hours: f64) -> ScenarioConfig {
        ScenarioConfig {
            duration_h: hours,
            ..ScenarioConfig::default()
        }
    }

    fn mean_visible(cfg: &ScenarioConfig, loc: &Location, t0: f64) -> f64 {
        let rx = loc.geodetic();
        let n = cfg.epochs_per_location();
        let total: usize = (0..n)
            .map(|e| {
                sky_at(cfg, t0 + cfg.epoch_time(e))
                    .iter()
                    .filter(|(_, _, p)| rx.elevation_deg(p) >= loc.elevation_mask_deg)
                    .count()
            })
            .sum();
        total as f64 / n as f64
    }

    #[test]
    fn full_sweep_has_2601_geometries() {
        let cfg = ScenarioConfig::default();
        assert_eq!(cfg.epochs_per_location(), 289);
        assert_eq!(cfg.locations.len() * cfg.epochs_per_location(), 2601);
    }

    #[test]
    fn noiseless_fault_free_ranges_are_exact() {
        let cfg = ScenarioConfig {
            noise_sigma_m: 0.0,
            fault_count: 0,
            ..short(0.0)
        };
        let EpochOutcome::Epoch(e) = synthesize_epoch(&cfg, 4, 0) else {
            panic!("epoch skipped")
        };
        let truth = e.truth_rx_pos.unwrap();
        for (m, pr) in e.measurements.iter().zip(e.conditioned_pseudoranges()) {
            assert_eq!(pr, distance(&truth, &m.sat_pos));
            assert_eq!(m.weight, 1.0);
        }
    }

    #[test]
    fn noise_std_matches_sigma() {
        let cfg = ScenarioConfig {
            fault_count: 0,
            ..short(4.0)
        };
        let out = simulate(&cfg).unwrap();
        let mut errs = Vec::new();
        for e in &out.epochs {
            let truth = e.truth_rx_pos.unwrap();
            for (m, pr) in e.measurements.iter().zip(e.conditioned_pseudoranges()) {
                errs.push(pr - distance(&truth, &m.sat_pos));
            }
        }
        assert!(errs.len() >= 10_000, "{} draws", errs.len());
        let n = errs.len() as f64;
        let mean = errs.iter().sum::<f64>() / n;
        let std = (errs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
        assert!((std - 10.0).abs() < 0.2, "std {std}");
        assert!(mean.abs() < 3.0 * 10.0 / n.sqrt(), "mean {mean}");
    }

    #[test]
    fn fault_labels_match_count_and_bias() {
        let cfg = ScenarioConfig {
            noise_sigma_m: 0.0,
            fault_count: 3,
            fault_bias_m: 40.0,
            ..short(1.0)
        };
        let out = simulate(&cfg).unwrap();
        assert!(out.skipped.is_empty());
        for e in &out.epochs {
            let labels = e.truth_labels().unwrap();
            assert_eq!(labels.iter().filter(|&&f| f).count(), 3);
            let truth = e.truth_rx_pos.unwrap();
            for (m, &f) in e.measurements.iter().zip(&labels) {
                let excess = m.pseudorange_raw - distance(&truth, &m.sat_pos);
                assert!((excess - if f { 40.0 } else { 0.0 }).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn simulation_is_deterministic() {
        let cfg = short(1.0);
        assert_eq!(simulate(&cfg).unwrap(), simulate(&cfg).unwrap());
        let other = ScenarioConfig { seed: 1, ..short(1.0) };
        assert_ne!(simulate(&cfg).unwrap(), simulate(&other).unwrap());
    }

    #[test]
    fn single_epoch_matches_sweep() {
        let cfg = short(1.0);
        let out = simulate(&cfg).unwrap();
        let EpochOutcome::Epoch(e) = synthesize_epoch(&cfg, 2, 5) else {
            panic!("skipped")
        };
        assert_eq!(out.epochs[2 * cfg.epochs_per_location() + 5], e);
    }

    #[test]
    fn wide_mask_sees_fewer_satellites() {
        let cfg = ScenarioConfig::default();
        for loc in cfg.locations.iter().filter(|l| l.elevation_mask_deg == 30.0) {
            let mut low = loc.clone();
            low.elevation_mask_deg = 10.0;
            assert!(mean_visible(&cfg, loc, 0.0) < mean_visible(&cfg, &low, 0.0), "{}", loc.name);
        }
    }

    #[test]
    fn visible_counts_repeat_after_sidereal_day() {
        let cfg = ScenarioConfig {
            constellations: vec![WalkerSpec::gps_like()],
            ..ScenarioConfig::default()
        };
        let sidereal = std::f64::consts::TAU / super::super::OMEGA_EARTH;
        for loc in &cfg.locations {
            let a = mean_visible(&cfg, loc, 0.0);
            let b = mean_visible(&cfg, loc, sidereal);
            assert!((a - b).abs() < 1.0, "{}: {a} vs {b}", loc.name);
        }
    }

    #[test]
    fn too_many_faults_skips_epoch() {
        let cfg = ScenarioConfig {
            fault_count: 200,
            ..short(0.0)
        };
        let out = simulate(&cfg).unwrap();
        assert!(out.epochs.is_empty());
        assert_eq!(out.skipped.len(), 9);
    }

    #[test]
    fn empty_toml_is_default() {
        let cfg: ScenarioConfig = toml::from_str("").unwrap();
        assert_eq!(cfg, ScenarioConfig::default());
        assert!(toml::from_str::<ScenarioConfig>("bogus = 1").is_err());
    }
}
