//! One entry point for every FDE method.

use crate::edm::{greedy_edm_fde, EdmOptions, EdmStatistic, SpectralBackend};
use crate::error::Result;
use crate::measurement::{EpochSet, FdeMethod, FdeResult};
use crate::residual::{greedy_residual_fde_with, ResidualOptions, TestGeometry};
use crate::separation::{solution_separation_fde, SsConfig, DEFAULT_SUBSET_BUDGET};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdeOptions {
    /// Stop the greedy loops after this many exclusions.
    pub max_faults: Option<usize>,
    pub removals_per_iter: usize,
    pub backend: SpectralBackend,
    pub residual_geometry: TestGeometry,
    /// Largest fault hypothesis for solution separation.
    pub ss_max_faults: usize,
    pub ss_subset_budget: u128,
}

impl Default for FdeOptions {
    fn default() -> Self {
        Self {
            max_faults: None,
            removals_per_iter: 1,
            backend: SpectralBackend::default(),
            residual_geometry: TestGeometry::default(),
            ss_max_faults: 2,
            ss_subset_budget: DEFAULT_SUBSET_BUDGET,
        }
    }
}

impl FdeOptions {
    pub fn edm(&self, statistic: EdmStatistic) -> EdmOptions {
        EdmOptions {
            max_faults: self.max_faults,
            removals_per_iter: self.removals_per_iter,
            statistic,
            backend: self.backend,
            ..EdmOptions::default()
        }
    }
}

/// Runs `method` on one epoch. Solution separation uses `threshold` for both
/// its detection and exclusion tests.
pub fn run_fde(epoch: &EpochSet, method: FdeMethod, threshold: f64, opts: &FdeOptions) -> Result<FdeResult> {
    match method {
        FdeMethod::Edm => greedy_edm_fde(epoch, threshold, &opts.edm(EdmStatistic::Pair)),
        FdeMethod::Edm2021 => greedy_edm_fde(epoch, threshold, &opts.edm(EdmStatistic::Legacy2021)),
        FdeMethod::Residual => greedy_residual_fde_with(
            epoch,
            threshold,
            &ResidualOptions {
                max_faults: opts.max_faults,
                geometry: opts.residual_geometry,
            },
        ),
        FdeMethod::Ss => {
            let cfg = SsConfig {
                subset_budget: opts.ss_subset_budget,
                ..SsConfig::fixed(opts.ss_max_faults, threshold, threshold)
            };
            solution_separation_fde(epoch, &cfg)
        }
    }
}

/// Whether a greedy loop with this threshold keeps excluding at `statistic`.
pub fn continues(method: FdeMethod, statistic: f64, threshold: f64) -> bool {
    match method {
        FdeMethod::Edm | FdeMethod::Edm2021 => statistic >= threshold,
        FdeMethod::Residual | FdeMethod::Ss => statistic > threshold,
    }
}

/// A greedy run carried to its guard, truncated to what a run at `threshold`
/// would have flagged.
///
/// Exclusion choices in the greedy loops do not depend on the threshold, only
/// the stopping round does, so one full run answers a whole threshold sweep.
/// Only valid for the greedy methods with one removal per round.
pub fn truncate_to_threshold(full: &FdeResult, threshold: f64) -> FdeResult {
    debug_assert!(full.method != FdeMethod::Ss);
    let rounds = full
        .statistic_trace
        .iter()
        .position(|&s| !continues(full.method, s, threshold))
        .unwrap_or(full.statistic_trace.len().saturating_sub(1))
        .min(full.exclusion_order.len());
    let mut out = full.clone();
    out.exclusion_order.truncate(rounds);
    out.statistic_trace.truncate(rounds + 1);
    out.flags = vec![false; full.flags.len()];
    for &i in &out.exclusion_order {
        out.flags[i] = true;
    }
    out
}

/// Threshold that drives a greedy loop all the way to its guard.
pub const EXHAUSTIVE_THRESHOLD: f64 = f64::MIN_POSITIVE;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{random_sky_epoch, SkyEpochSpec};

    #[test]
    fn truncation_matches_direct_runs() {
        let opts = FdeOptions::default();
        let mut spec = SkyEpochSpec::noisy(14, 10.0);
        spec.faults = vec![(1, 60.0), (5, 60.0), (9, 60.0), (12, 60.0)];
        for seed in 0..10 {
            let e = random_sky_epoch(seed, &spec);
            for (method, grid) in [
                (FdeMethod::Edm, vec![1e-9, 1e-8, 1e-7, 1e-6, 0.5]),
                (FdeMethod::Edm2021, vec![1e-6, 1e-3, 1.0, 100.0]),
                (FdeMethod::Residual, vec![1.0, 10.0, 30.0, 100.0, 1e4]),
            ] {
                let full = run_fde(&e, method, EXHAUSTIVE_THRESHOLD, &opts).unwrap();
                for t in grid {
                    let direct = run_fde(&e, method, t, &opts).unwrap();
                    let cut = truncate_to_threshold(&full, t);
                    assert_eq!(cut.flags, direct.flags, "{method} t={t}");
                    assert_eq!(cut.statistic_trace, direct.statistic_trace, "{method} t={t}");
                }
            }
        }
    }

    #[test]
    fn every_method_runs() {
        let e = random_sky_epoch(1, &SkyEpochSpec::noiseless(20).with_fault(2, 500.0));
        let opts = FdeOptions::default();
        for (method, t) in [
            (FdeMethod::Edm, 1e-6),
            (FdeMethod::Edm2021, 1e-6),
            (FdeMethod::Residual, 1e-3),
            (FdeMethod::Ss, 5.0),
        ] {
            let r = run_fde(&e, method, t, &opts).unwrap();
            assert_eq!(r.method, method);
            assert_eq!(r.exclusion_order, vec![2], "{method}");
        }
    }

    #[test]
    fn methods_agree_on_large_single_faults() {
        let n = 200;
        let mut same = 0;
        for seed in 0..n {
            let m = 8 + (seed % 33) as usize;
            let bias = 100.0 + 50.0 * (seed % 9) as f64;
            let e = random_sky_epoch(7_000 + seed, &SkyEpochSpec::noiseless(m).with_fault(seed as usize % m, bias));
            let edm = run_fde(&e, FdeMethod::Edm, 1e-9, &FdeOptions::default()).unwrap();
            let res = run_fde(&e, FdeMethod::Residual, 1e-3, &FdeOptions::default()).unwrap();
            same += usize::from(edm.flags == res.flags);
        }
        assert!(same * 100 >= 95 * n as usize, "agreement {same}/{n}");
    }
}
