//! Browser bindings for three interactive views:
//!
//! * `spectrum`: Gram-matrix eigenvalue magnitudes for one random sky, with
//!   and without a biased range, plus the detection statistic against bias.
//! * `roc`: EDM and residual ROC curves for one simulated location.
//! * `complexity`: operation-count curves for the three detectors.
//!
//! Exports return JSON strings. The same functions without the wasm wrapper
//! are public so they can be tested natively.

use greedy_fde::edm::{detection_statistic, gram_spectrum, SpectralBackend, SPACE_DIM};
use greedy_fde::eval::{auc, complexity_curves, roc_curve, simulation_grid, threshold_sweep, RocPoint};
use greedy_fde::sim::{random_sky_epoch, simulate, Location, ScenarioConfig, SkyEpochSpec};
use greedy_fde::{FdeMethod, FdeOptions};
use serde::Serialize;
use wasm_bindgen::prelude::*;

const SHOWN_EIGENVALUES: usize = 8;
const BIAS_STEPS: usize = 16;
const BIAS_TRIALS: u64 = 12;

#[derive(Debug, Serialize)]
pub struct SpectrumView {
    pub clean: Vec<f64>,
    pub faulty: Vec<f64>,
    pub statistic_clean: f64,
    pub statistic_faulty: f64,
    /// `(bias, mean statistic)` over a few skies.
    pub statistic_vs_bias: Vec<(f64, f64)>,
}

#[derive(Debug, Serialize)]
pub struct RocSeries {
    pub method: FdeMethod,
    pub auc: f64,
    pub points: Vec<RocPoint>,
}

#[derive(Debug, Serialize)]
pub struct RocView {
    pub location: String,
    pub epochs: usize,
    pub series: Vec<RocSeries>,
}

#[derive(Debug, Serialize)]
pub struct ComplexityPoint {
    pub m: u32,
    pub log10_edm: f64,
    pub log10_residual: f64,
    pub log10_ss: f64,
}

fn magnitudes(seed: u64, spec: &SkyEpochSpec) -> Result<(Vec<f64>, f64), String> {
    let e = random_sky_epoch(seed, spec);
    let s = gram_spectrum(&e.sat_positions(), &e.conditioned_pseudoranges(), SpectralBackend::Dense)
        .map_err(|e| e.to_string())?;
    let stat = detection_statistic(&s, SPACE_DIM).map_err(|e| e.to_string())?;
    Ok((s.values.iter().take(SHOWN_EIGENVALUES).map(|v| v.abs()).collect(), stat))
}

pub fn spectrum_view(seed: u64, satellites: usize, sigma_m: f64, bias_m: f64) -> Result<SpectrumView, String> {
    if !(6..=60).contains(&satellites) {
        return Err(format!("satellites must lie in [6, 60], got {satellites}"));
    }
    if !(sigma_m >= 0.0 && bias_m.is_finite()) {
        return Err("sigma must be nonnegative and bias finite".into());
    }
    let clean_spec = SkyEpochSpec::noisy(satellites, sigma_m);
    let (clean, statistic_clean) = magnitudes(seed, &clean_spec)?;
    let (faulty, statistic_faulty) = magnitudes(seed, &clean_spec.clone().with_fault(0, bias_m))?;

    let top = bias_m.abs().max(10.0) * 2.0;
    let mut statistic_vs_bias = Vec::with_capacity(BIAS_STEPS + 1);
    for step in 0..=BIAS_STEPS {
        let b = top * step as f64 / BIAS_STEPS as f64;
        let mut sum = 0.0;
        for trial in 0..BIAS_TRIALS {
            sum += magnitudes(seed.wrapping_add(trial), &clean_spec.clone().with_fault(0, b))?.1;
        }
        statistic_vs_bias.push((b, sum / BIAS_TRIALS as f64));
    }
    Ok(SpectrumView {
        clean,
        faulty,
        statistic_clean,
        statistic_faulty,
        statistic_vs_bias,
    })
}

pub fn location_names() -> Vec<String> {
    Location::default_set().into_iter().map(|l| l.name).collect()
}

pub fn roc_view(seed: u64, location: usize, hours: f64, fault_count: usize, bias_m: f64) -> Result<RocView, String> {
    let site = Location::default_set()
        .into_iter()
        .nth(location)
        .ok_or_else(|| format!("no location {location}"))?;
    if !(hours > 0.0 && hours <= 24.0) {
        return Err(format!("hours must lie in (0, 24], got {hours}"));
    }
    let cfg = ScenarioConfig {
        seed,
        duration_h: hours,
        fault_count,
        fault_bias_m: bias_m,
        locations: vec![site.clone()],
        ..ScenarioConfig::default()
    };
    let epochs = simulate(&cfg).map_err(|e| e.to_string())?.epochs;
    if epochs.is_empty() {
        return Err(format!("{}: every epoch skipped; lower the fault count", site.name));
    }
    let series = [FdeMethod::Edm, FdeMethod::Residual]
        .into_iter()
        .map(|method| {
            let runs = threshold_sweep(&epochs, method, &simulation_grid(method), &FdeOptions::default())
                .map_err(|e| e.to_string())?;
            let points = roc_curve(&epochs, &runs).map_err(|e| e.to_string())?;
            Ok(RocSeries {
                method,
                auc: auc(&points),
                points,
            })
        })
        .collect::<Result<Vec<_>, String>>()?;
    Ok(RocView {
        location: site.name,
        epochs: epochs.len(),
        series,
    })
}

fn log10(v: &impl ToString) -> f64 {
    v.to_string().parse::<f64>().map_or(f64::NAN, f64::log10)
}

pub fn complexity_view(f: u32, k: u32, m_min: u32, m_max: u32) -> Result<Vec<ComplexityPoint>, String> {
    if m_max > 400 {
        return Err("m_max is capped at 400".into());
    }
    let lo = m_min.max(f + 1);
    if lo > m_max {
        return Err(format!("empty range: m_max must be at least {lo}"));
    }
    Ok(complexity_curves(lo..=m_max, f, k)?
        .iter()
        .map(|r| ComplexityPoint {
            m: r.m,
            log10_edm: log10(&r.edm),
            log10_residual: log10(&r.residual),
            log10_ss: log10(&r.ss),
        })
        .collect())
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn spectrum(seed: u32, satellites: usize, sigma_m: f64, bias_m: f64) -> Result<String, JsError> {
    to_js(spectrum_view(seed.into(), satellites, sigma_m, bias_m))
}

#[wasm_bindgen]
pub fn locations() -> Result<String, JsError> {
    to_js(Ok(location_names()))
}

#[wasm_bindgen]
pub fn roc(seed: u32, location: usize, hours: f64, fault_count: usize, bias_m: f64) -> Result<String, JsError> {
    to_js(roc_view(seed.into(), location, hours, fault_count, bias_m))
}

#[wasm_bindgen]
pub fn complexity(f: u32, k: u32, m_min: u32, m_max: u32) -> Result<String, JsError> {
    to_js(complexity_view(f, k, m_min, m_max))
}
