//! Solution-separation FDE: compare the all-in-view position with the
//! position from every subset that drops up to `f` measurements.

use itertools::Itertools;

use crate::clock::Stopwatch;
use crate::error::{FdeError, Result};
use crate::geodesy::{distance, Ecef};
use crate::linalg::{spd_inverse, Matrix};
use crate::measurement::{EpochSet, FdeMethod, FdeResult};
use crate::residual::{wls_position, GeometryMatrix};

/// Below this many measurements the method does not run.
pub const MIN_MEASUREMENTS: usize = 6;
pub const DEFAULT_SUBSET_BUDGET: u128 = 1_000_000;

/// Parameters of an externally supplied threshold rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdParams {
    pub beta: f64,
    pub p_hi: f64,
    pub c_req: f64,
}

/// Computes `(T_d, T_e)` for `m` measurements and `f` hypothesized faults.
pub type ThresholdRule = fn(&ThresholdParams, usize, usize) -> (f64, f64);

#[derive(Debug, Clone, Copy)]
pub enum ThresholdProvider {
    Fixed { detection: f64, exclusion: f64 },
    Rule { params: ThresholdParams, rule: ThresholdRule },
}

impl ThresholdProvider {
    fn thresholds(&self, m: usize, f: usize) -> (f64, f64) {
        match self {
            Self::Fixed { detection, exclusion } => (*detection, *exclusion),
            Self::Rule { params, rule } => rule(params, m, f),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SsConfig {
    pub max_faults: usize,
    pub thresholds: ThresholdProvider,
    pub subset_budget: u128,
}

impl SsConfig {
    pub fn fixed(max_faults: usize, detection: f64, exclusion: f64) -> Self {
        Self {
            max_faults,
            thresholds: ThresholdProvider::Fixed { detection, exclusion },
            subset_budget: DEFAULT_SUBSET_BUDGET,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SsSubsetRecord {
    pub removed_indexes: Vec<usize>,
    pub subset_position: Ecef,
    pub separation: f64,
    pub sigma_delta: f64,
    pub statistic: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SsReport {
    pub result: FdeResult,
    /// One record per subset of the top-level hypothesis sweep.
    pub records: Vec<SsSubsetRecord>,
    /// Subsets solved, including the exclusion checks.
    pub subsets_evaluated: u128,
}

/// `trace((GᵀG)⁻¹)` for the three-column geometry matrix.
pub fn ss_normalizer(sats: &[Ecef], rx: &Ecef) -> Result<f64> {
    let g = GeometryMatrix::new(rx, sats);
    let mut n = Matrix::zeros(3, 3);
    for row in g.rows() {
        for a in 0..3 {
            for b in 0..3 {
                n[(a, b)] += row[a] * row[b];
            }
        }
    }
    Ok(spd_inverse(&n)?.trace())
}

/// `Σ_{a=1}^{f} C(m, a)`, saturating at `u128::MAX`.
pub fn subset_count(m: usize, f: usize) -> u128 {
    let mut total: u128 = 0;
    let mut c: u128 = 1;
    for a in 1..=f.min(m) {
        c = match c.checked_mul((m + 1 - a) as u128) {
            Some(v) => v / a as u128,
            None => return u128::MAX,
        };
        total = total.saturating_add(c);
    }
    total
}

/// All index sets of size `1..=f` drawn from `0..m`: ascending size,
/// lexicographic within a size.
pub fn enumerate_subsets(m: usize, f: usize) -> impl Iterator<Item = Vec<usize>> {
    (1..=f.min(m)).flat_map(move |a| (0..m).combinations(a))
}

struct Reduced {
    sats: Vec<Ecef>,
    ranges: Vec<f64>,
    weights: Vec<f64>,
}

impl Reduced {
    fn without(&self, removed: &[usize]) -> Reduced {
        let keep = |i: &usize| !removed.contains(i);
        let pick = |v: &[f64]| (0..v.len()).filter(keep).map(|i| v[i]).collect();
        Reduced {
            sats: (0..self.sats.len()).filter(keep).map(|i| self.sats[i]).collect(),
            ranges: pick(&self.ranges),
            weights: pick(&self.weights),
        }
    }

    fn len(&self) -> usize {
        self.sats.len()
    }
}

/// Evaluates every subset hypothesis of size `1..=f` against the all-in-view
/// solution of `set`. Subsets whose geometry is singular are skipped.
fn separations(set: &Reduced, f: usize) -> Result<(Vec<SsSubsetRecord>, u128)> {
    let full = wls_position(&set.sats, &set.ranges, &set.weights, None)?;
    let sigma2 = ss_normalizer(&set.sats, &full.rx_pos)?;
    let subsets: Vec<Vec<usize>> = enumerate_subsets(set.len(), f).collect();
    let count = subsets.len() as u128;
    let records = crate::par::map_range(subsets.len(), |k| {
        let removed = &subsets[k];
        let sub = set.without(removed);
        let sol = wls_position(&sub.sats, &sub.ranges, &sub.weights, None).ok()?;
        let sigma_i2 = ss_normalizer(&sub.sats, &full.rx_pos).ok()?;
        let separation = distance(&full.rx_pos, &sol.rx_pos);
        let sigma_delta = (sigma_i2 - sigma2).max(0.0).sqrt();
        if !(sigma_delta > 0.0) {
            return None;
        }
        Some(SsSubsetRecord {
            removed_indexes: removed.clone(),
            subset_position: sol.rx_pos,
            separation,
            sigma_delta,
            statistic: separation / sigma_delta,
        })
    });
    Ok((records.into_iter().flatten().collect(), count))
}

/// Solution-separation FDE returning the per-subset records as well.
pub fn solution_separation_report(epoch: &EpochSet, cfg: &SsConfig) -> Result<SsReport> {
    let mut result = FdeResult::new(FdeMethod::Ss, epoch);
    let timer = Stopwatch::start();
    let m = epoch.len();
    if cfg.max_faults == 0 {
        return Err(FdeError::InvalidArgument("max_faults must be >= 1".into()));
    }
    if m < MIN_MEASUREMENTS {
        return Ok(SsReport {
            result,
            records: Vec::new(),
            subsets_evaluated: 0,
        });
    }
    let f = cfg.max_faults.min(m - MIN_MEASUREMENTS).max(1);
    let requested = subset_count(m, f);
    if requested > cfg.subset_budget {
        return Err(FdeError::BudgetExceeded {
            requested,
            budget: cfg.subset_budget,
        });
    }
    let (t_d, t_e) = cfg.thresholds.thresholds(m, f);

    let set = Reduced {
        sats: epoch.sat_positions(),
        ranges: epoch.conditioned_pseudoranges(),
        weights: epoch.weights(),
    };
    let (records, mut evaluated) = match separations(&set, f) {
        Ok(v) => v,
        Err(FdeError::SingularGeometry { .. }) => {
            result.converged = false;
            result.wall_time_s = timer.elapsed_s();
            return Ok(SsReport {
                result,
                records: Vec::new(),
                subsets_evaluated: 0,
            });
        }
        Err(e) => return Err(e),
    };
    let max_q = records.iter().map(|r| r.statistic).fold(0.0, f64::max);
    result.statistic_trace.push(max_q);

    // Confirm each detecting hypothesis by re-running detection, from
    // scratch, on the measurements it keeps.
    let mut best: Option<(&SsSubsetRecord, f64)> = None;
    for rec in records.iter().filter(|r| r.statistic > t_d) {
        if let Some((b, _)) = best {
            if b.removed_indexes.len() < rec.removed_indexes.len() {
                break;
            }
        }
        let remaining = f - rec.removed_indexes.len();
        let reduced = set.without(&rec.removed_indexes);
        let check_q = if remaining == 0 || reduced.len() < MIN_MEASUREMENTS {
            0.0
        } else {
            match separations(&reduced, remaining) {
                Ok((sub, n)) => {
                    evaluated += n;
                    sub.iter().map(|r| r.statistic).fold(0.0, f64::max)
                }
                Err(FdeError::SingularGeometry { .. }) => continue,
                Err(e) => return Err(e),
            }
        };
        if check_q > t_e {
            continue;
        }
        let better = match best {
            None => true,
            Some((b, _)) => rec.statistic > b.statistic,
        };
        if better {
            best = Some((rec, check_q));
        }
    }

    if let Some((rec, check_q)) = best {
        for &i in &rec.removed_indexes {
            result.exclude(i);
        }
        result.statistic_trace.push(check_q);
    }
    result.wall_time_s = timer.elapsed_s();
    Ok(SsReport {
        result,
        records,
        subsets_evaluated: evaluated,
    })
}

pub fn solution_separation_fde(epoch: &EpochSet, cfg: &SsConfig) -> Result<FdeResult> {
    solution_separation_report(epoch, cfg).map(|r| r.result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::oracle::gauss_jordan_inverse;
    use crate::sim::{random_sky_epoch, SkyEpochSpec};

    #[test]
    fn normalizer_identity_geometry() {
        let sats = [[-1e7, 0.0, 0.0], [0.0, -1e7, 0.0], [0.0, 0.0, -1e7]];
        assert!((ss_normalizer(&sats, &[0.0; 3]).unwrap() - 3.0).abs() < 1e-12);
        let dup = [[-1e7, 0.0, 0.0], [-1e7, 0.0, 0.0], [0.0, 0.0, -1e7], [0.0, 0.0, -1e7]];
        assert!(matches!(
            ss_normalizer(&dup, &[0.0; 3]),
            Err(FdeError::SingularGeometry { .. })
        ));
    }

    #[test]
    fn normalizer_matches_explicit_inverse() {
        for seed in 0..10 {
            let e = random_sky_epoch(seed, &SkyEpochSpec::noiseless(10));
            let rx = e.truth_rx_pos.unwrap();
            let g = GeometryMatrix::new(&rx, &e.sat_positions()).to_matrix();
            let oracle = gauss_jordan_inverse(&g.transpose().matmul(&g)).trace();
            let got = ss_normalizer(&e.sat_positions(), &rx).unwrap();
            assert!((got - oracle).abs() < 1e-8 * oracle);
        }
    }

    #[test]
    fn subset_counts() {
        assert_eq!(enumerate_subsets(5, 1).count(), 5);
        assert_eq!(subset_count(10, 3), 175);
        assert_eq!(enumerate_subsets(10, 3).count(), 175);
        assert_eq!(subset_count(20, 4), 6195);
        assert_eq!(enumerate_subsets(20, 4).count(), 6195);
        assert!(subset_count(48, 8) > 370_000_000);
        let first: Vec<Vec<usize>> = enumerate_subsets(4, 2).take(6).collect();
        assert_eq!(first, vec![vec![0], vec![1], vec![2], vec![3], vec![0, 1], vec![0, 2]]);
    }

    #[test]
    fn fault_free_flags_nothing() {
        let e = random_sky_epoch(3, &SkyEpochSpec::noiseless(8));
        let r = solution_separation_fde(&e, &SsConfig::fixed(2, 5.0, 5.0)).unwrap();
        assert_eq!(r.flag_count(), 0);
    }

    #[test]
    fn single_fault_flagged() {
        for seed in 0..10 {
            let k = seed as usize % 8;
            let e = random_sky_epoch(seed, &SkyEpochSpec::noiseless(8).with_fault(k, 500.0));
            let r = solution_separation_fde(&e, &SsConfig::fixed(2, 5.0, 5.0)).unwrap();
            assert_eq!(r.exclusion_order, vec![k], "seed {seed}");
        }
    }

    #[test]
    fn subset_variance_never_shrinks() {
        for seed in 0..5 {
            let e = random_sky_epoch(seed, &SkyEpochSpec::noiseless(10));
            let rx = e.truth_rx_pos.unwrap();
            let sats = e.sat_positions();
            let s2 = ss_normalizer(&sats, &rx).unwrap();
            for removed in enumerate_subsets(10, 2) {
                let sub: Vec<Ecef> = (0..10).filter(|i| !removed.contains(i)).map(|i| sats[i]).collect();
                assert!(ss_normalizer(&sub, &rx).unwrap() - s2 >= -1e-9);
            }
        }
    }

    #[test]
    fn evaluation_count_matches_closed_form() {
        let e = random_sky_epoch(8, &SkyEpochSpec::noisy(20, 1.0));
        let report = solution_separation_report(&e, &SsConfig::fixed(4, 1e9, 1e9)).unwrap();
        assert_eq!(report.subsets_evaluated, 6195);
        assert_eq!(report.records.len(), 6195);
    }

    #[test]
    fn budget_and_small_epochs() {
        let e = random_sky_epoch(1, &SkyEpochSpec::noiseless(30));
        let cfg = SsConfig {
            subset_budget: 100,
            ..SsConfig::fixed(3, 5.0, 5.0)
        };
        assert!(matches!(
            solution_separation_fde(&e, &cfg),
            Err(FdeError::BudgetExceeded { requested: 4525, budget: 100 })
        ));
        let small = random_sky_epoch(1, &SkyEpochSpec::noiseless(5).with_fault(0, 500.0));
        assert_eq!(solution_separation_fde(&small, &SsConfig::fixed(1, 5.0, 5.0)).unwrap().flag_count(), 0);
    }

    #[test]
    fn rule_thresholds_are_used() {
        fn never(_: &ThresholdParams, _: usize, _: usize) -> (f64, f64) {
            (f64::INFINITY, 0.0)
        }
        let e = random_sky_epoch(2, &SkyEpochSpec::noiseless(8).with_fault(1, 500.0));
        let cfg = SsConfig {
            thresholds: ThresholdProvider::Rule {
                params: ThresholdParams { beta: 0.0, p_hi: 1e-7, c_req: 1e-5 },
                rule: never,
            },
            ..SsConfig::fixed(2, 0.0, 0.0)
        };
        assert_eq!(solution_separation_fde(&e, &cfg).unwrap().flag_count(), 0);
    }

    #[test]
    fn flags_invariant_to_order() {
        for seed in 0..5 {
            let e = random_sky_epoch(seed, &SkyEpochSpec::noiseless(9).with_fault(4, 400.0));
            let mut p = e.clone();
            p.measurements.reverse();
            let cfg = SsConfig::fixed(2, 5.0, 5.0);
            let a = solution_separation_fde(&e, &cfg).unwrap();
            let b = solution_separation_fde(&p, &cfg).unwrap();
            let rev: Vec<bool> = b.flags.iter().rev().copied().collect();
            assert_eq!(a.flags, rev);
        }
    }
}
