//! Acceptance suite: one PASS/FAIL line per criterion, run sequentially so the
//! timing comparison is not disturbed by other work in the process.
//!
//! Run with `cargo test -p greedy-fde --test acceptance --release`.

use std::io::Write;
use std::time::Instant;

use greedy_fde::edm::{detection_statistic, gram_spectrum, greedy_edm_fde, EdmOptions, SpectralBackend};
use greedy_fde::eval::{
    auc, baseline_error, calibrate_threshold, complexity_curves, edm_cost, group_timing, residual_cost,
    roc_curve, simulation_grid, ss_cost, threshold_error_curve, threshold_sweep, timing_profile, GroupBy,
    ThresholdRun, TimingRecord,
};
use greedy_fde::linalg::{sym_eig, Matrix, SymMatrix};
use greedy_fde::residual::{chi_square_statistic, greedy_residual_fde, normalized_residuals, GeometryMatrix};
use greedy_fde::separation::{enumerate_subsets, solution_separation_fde, subset_count, SsConfig};
use greedy_fde::sim::{random_sky_epoch, simulate, ScenarioConfig, SkyEpochSpec};
use greedy_fde::{EpochSet, FdeMethod, FdeOptions};
use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20_240_601;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn report(id: u32, name: &str, o: &Outcome, elapsed: f64) {
    let verdict = if o.pass { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    writeln!(out, "criterion {id:>2} [{verdict}] {name}: {} ({elapsed:.1} s)", o.detail).unwrap();
}

fn sat_count(seed: u64) -> usize {
    8 + (seed % 33) as usize
}

fn pair_magnitude(e: &EpochSet) -> (f64, f64) {
    let spec = gram_spectrum(&e.sat_positions(), &e.conditioned_pseudoranges(), SpectralBackend::Dense).unwrap();
    let pair = 0.5 * (spec.values[3].abs() + spec.values[4].abs());
    (pair, detection_statistic(&spec, 3).unwrap())
}

fn c1_rank_property() -> Outcome {
    let n = 200;
    let (mut clean_ok, mut fault_ok) = (0, 0);
    let (mut worst_clean, mut weakest_fault) = (0.0f64, f64::INFINITY);
    for seed in 0..n {
        let m = sat_count(seed);
        let clean = random_sky_epoch(SEED + seed, &SkyEpochSpec::noiseless(m));
        let s = pair_magnitude(&clean).1;
        worst_clean = worst_clean.max(s);
        clean_ok += usize::from(s < 1e-9);
        let faulty = random_sky_epoch(
            SEED + seed,
            &SkyEpochSpec::noiseless(m).with_fault(seed as usize % m, 100.0),
        );
        let s = pair_magnitude(&faulty).1;
        weakest_fault = weakest_fault.min(s);
        fault_ok += usize::from(s >= 1e-3);
    }
    outcome(
        clean_ok == n as usize && fault_ok == n as usize,
        format!(
            "{n} epochs, 8-40 sats; clean stat < 1e-9 in {clean_ok}/{n} (max {worst_clean:.2e}); \
             100 m bias stat >= 1e-3 in {fault_ok}/{n} (min {weakest_fault:.2e})"
        ),
    )
}

fn c2_eigenvalue_pair() -> Outcome {
    let (mut with, mut without) = (0.0, 0.0);
    for seed in 0..100 {
        let clean = random_sky_epoch(SEED + seed, &SkyEpochSpec::noisy(20, 10.0));
        let faulty = random_sky_epoch(SEED + seed, &SkyEpochSpec::noisy(20, 10.0).with_fault(0, 60.0));
        without += pair_magnitude(&clean).0;
        with += pair_magnitude(&faulty).0;
    }
    let ratio = with / without;
    outcome(
        ratio >= 5.0,
        format!("mean (|l4|+|l5|)/2 with 60 m fault / fault-free = {ratio:.2} (need >= 5), 100 seeds, 20 sats, sigma 10 m"),
    )
}

fn c3_exclusion() -> Outcome {
    let n = 500;
    let (mut edm_ok, mut res_ok) = (0, 0);
    for seed in 0..n {
        let m = sat_count(seed);
        let k = (seed as usize * 7) % m;
        let e = random_sky_epoch(SEED + seed, &SkyEpochSpec::noiseless(m).with_fault(k, 500.0));
        let edm = greedy_edm_fde(&e, 1e-9, &EdmOptions::default()).unwrap();
        edm_ok += usize::from(edm.exclusion_order == [k]);
        let res = greedy_residual_fde(&e, 1e-3).unwrap();
        res_ok += usize::from(res.exclusion_order == [k]);
    }
    let need = (0.99 * n as f64).ceil() as usize;
    outcome(
        edm_ok >= need && res_ok >= need,
        format!("exact single-fault exclusion, {n} noiseless epochs, 8-40 sats, 500 m: edm {edm_ok}/{n}, residual {res_ok}/{n} (need >= {need})"),
    )
}

struct Sweep {
    epochs: Vec<EpochSet>,
    edm: Vec<ThresholdRun>,
    residual: Vec<ThresholdRun>,
}

fn sweep(cfg: &ScenarioConfig, opts: &FdeOptions) -> Sweep {
    let epochs = simulate(cfg).unwrap().epochs;
    let edm = threshold_sweep(&epochs, FdeMethod::Edm, &simulation_grid(FdeMethod::Edm), opts).unwrap();
    let residual = threshold_sweep(&epochs, FdeMethod::Residual, &simulation_grid(FdeMethod::Residual), opts).unwrap();
    Sweep { epochs, edm, residual }
}

fn subset_auc(epochs: &[EpochSet], runs: &[ThresholdRun], keep: &dyn Fn(&EpochSet) -> bool) -> f64 {
    let idx: Vec<usize> = (0..epochs.len()).filter(|&i| keep(&epochs[i])).collect();
    let sub: Vec<EpochSet> = idx.iter().map(|&i| epochs[i].clone()).collect();
    let sub_runs: Vec<ThresholdRun> = runs
        .iter()
        .map(|r| ThresholdRun {
            threshold: r.threshold,
            results: idx.iter().map(|&i| r.results[i].clone()).collect(),
        })
        .collect();
    auc(&roc_curve(&sub, &sub_runs).unwrap())
}

fn desk_config() -> ScenarioConfig {
    ScenarioConfig {
        seed: SEED,
        duration_h: 1.0,
        fault_bias_m: 60.0,
        fault_count: 8,
        ..ScenarioConfig::default()
    }
}

fn c4_auc_parity(s: &Sweep, cfg: &ScenarioConfig) -> Outcome {
    let mut worst_gap = 0.0f64;
    let mut rows = Vec::new();
    let (mut wide, mut narrow) = (Vec::new(), Vec::new());
    for loc in &cfg.locations {
        let keep = |e: &EpochSet| e.trace_id == loc.name;
        let a_edm = subset_auc(&s.epochs, &s.edm, &keep);
        let a_res = subset_auc(&s.epochs, &s.residual, &keep);
        worst_gap = worst_gap.max((a_edm - a_res).abs());
        rows.push(format!("{} {a_edm:.2}/{a_res:.2}", loc.name));
        let group = if loc.elevation_mask_deg >= 30.0 { &mut narrow } else { &mut wide };
        group.push((a_edm, a_res));
    }
    let mean = |v: &[(f64, f64)], edm: bool| v.iter().map(|p| if edm { p.0 } else { p.1 }).sum::<f64>() / v.len() as f64;
    let ordering = mean(&wide, true) > mean(&narrow, true) && mean(&wide, false) > mean(&narrow, false);
    outcome(
        worst_gap <= 0.10 && ordering,
        format!(
            "max |AUC_edm - AUC_res| = {worst_gap:.3} (need <= 0.10); mean AUC 10-deg vs 30-deg masks: edm {:.2} vs {:.2}, residual {:.2} vs {:.2} (need 10-deg higher); edm/res per location: {}",
            mean(&wide, true),
            mean(&narrow, true),
            mean(&wide, false),
            mean(&narrow, false),
            rows.join(", ")
        ),
    )
}

fn c5_auc_monotone() -> Outcome {
    let opts = FdeOptions::default();
    let mut edm = Vec::new();
    let mut res = Vec::new();
    for bias in [10.0, 20.0, 40.0, 60.0] {
        let mut cfg = ScenarioConfig {
            seed: SEED,
            fault_bias_m: bias,
            fault_count: 8,
            ..ScenarioConfig::default()
        };
        cfg.locations.retain(|l| l.name == "Munich");
        let s = sweep(&cfg, &opts);
        edm.push(subset_auc(&s.epochs, &s.edm, &|_| true));
        res.push(subset_auc(&s.epochs, &s.residual, &|_| true));
    }
    let nondecreasing = |v: &[f64]| v.windows(2).all(|w| w[1] >= w[0]);
    let pass = nondecreasing(&edm) && nondecreasing(&res) && edm[3] - edm[0] >= 0.1 && res[3] - res[0] >= 0.1;
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(" ");
    outcome(
        pass,
        format!(
            "Munich 24 h, 8 faults, bias 10/20/40/60 m: edm AUC {} ; residual AUC {} (need nondecreasing, 60 m - 10 m >= 0.1)",
            fmt(&edm),
            fmt(&res)
        ),
    )
}

fn timing_ratio(epochs: &[EpochSet], t_edm: f64, t_res: f64, backend: SpectralBackend) -> (bool, Vec<String>) {
    let opts = FdeOptions { backend, ..FdeOptions::default() };
    let mut records: Vec<TimingRecord> = Vec::new();
    for rep in 0..5 {
        let order = if rep % 2 == 0 {
            [(FdeMethod::Edm, t_edm), (FdeMethod::Residual, t_res)]
        } else {
            [(FdeMethod::Residual, t_res), (FdeMethod::Edm, t_edm)]
        };
        for (method, t) in order {
            records.extend(timing_profile(method, epochs, t, &opts).unwrap());
        }
    }
    let groups = group_timing(&records, GroupBy::MeasurementCount);
    let mut pass = true;
    let mut ratios = Vec::new();
    for g in groups.iter().filter(|g| g.method == FdeMethod::Edm && g.group_value >= 20) {
        let r = groups
            .iter()
            .find(|h| h.method == FdeMethod::Residual && h.group_value == g.group_value)
            .expect("both methods timed on the same epochs");
        let ratio = g.mean_s / r.mean_s;
        pass &= ratio <= 0.5;
        ratios.push(format!("m={}: {ratio:.2}", g.group_value));
    }
    (pass && !ratios.is_empty(), ratios)
}

fn calibrated(epochs: &[EpochSet], runs: &[ThresholdRun]) -> (f64, f64, Vec<(f64, f64)>) {
    let curve = threshold_error_curve(epochs, runs).unwrap();
    let grid: Vec<f64> = curve.iter().map(|c| c.0).collect();
    let c = calibrate_threshold(&grid, |t| curve.iter().find(|c| c.0 == t).unwrap().1).unwrap();
    (c.threshold, c.value, curve)
}

/// Mean seconds per statistic evaluation when running to the guard.
fn per_round(epochs: &[EpochSet], method: FdeMethod) -> f64 {
    let opts = FdeOptions::default();
    let (mut time, mut rounds) = (0.0, 0usize);
    for _ in 0..5 {
        for e in epochs.iter().filter(|e| e.len() >= 20) {
            let r = greedy_fde::run_fde(e, method, greedy_fde::fde::EXHAUSTIVE_THRESHOLD, &opts).unwrap();
            time += r.wall_time_s;
            rounds += r.statistic_trace.len();
        }
    }
    time / rounds as f64
}

fn c6_timing(s: &Sweep) -> Outcome {
    let (t_edm, _, _) = calibrated(&s.epochs, &s.edm);
    let (t_res, _, _) = calibrated(&s.epochs, &s.residual);
    let (pass, ratios) = timing_ratio(&s.epochs, t_edm, t_res, SpectralBackend::Factored);
    let (_, dense) = timing_ratio(&s.epochs, t_edm, t_res, SpectralBackend::Dense);
    let round_ratio = per_round(&s.epochs, FdeMethod::Edm) / per_round(&s.epochs, FdeMethod::Residual);
    outcome(
        pass,
        format!(
            "edm/residual mean wall time per measurement count at calibrated thresholds edm {t_edm:.2e}, residual {t_res:.2e} \
             (>= 20 meas, 8 faults; need <= 0.5): {}; dense-Jacobi route for reference: {}; per-round ratio running to the guard: {round_ratio:.2}",
            ratios.join(", "),
            dense.join(", ")
        ),
    )
}

fn gauss_jordan_inverse(m: &Matrix) -> Matrix {
    let n = m.rows();
    let mut a: Vec<Vec<f64>> = (0..n).map(|i| m.row(i).to_vec()).collect();
    let mut inv: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect();
    for c in 0..n {
        let p = (c..n).max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs())).unwrap();
        a.swap(c, p);
        inv.swap(c, p);
        let d = a[c][c];
        for j in 0..n {
            a[c][j] /= d;
            inv[c][j] /= d;
        }
        for r in 0..n {
            if r != c {
                let f = a[r][c];
                for j in 0..n {
                    a[r][j] -= f * a[c][j];
                    inv[r][j] -= f * inv[c][j];
                }
            }
        }
    }
    Matrix::from_rows(&inv)
}

fn c7_oracles() -> Outcome {
    let mut worst_chi = 0.0f64;
    let mut worst_lnr = 0.0f64;
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1e-300);
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ seed);
        let m = rng.random_range(6..30);
        let e = random_sky_epoch(SEED + seed, &SkyEpochSpec::noiseless(m));
        let rx = e.truth_rx_pos.unwrap();
        let sats = e.sat_positions();
        let r: Vec<f64> = (0..m).map(|_| rng.random_range(-50.0..50.0)).collect();
        let w: Vec<f64> = (0..m).map(|_| rng.random_range(0.01..1.0)).collect();

        let g = GeometryMatrix::new(&rx, &sats).to_matrix();
        let wm = Matrix::from_fn(m, m, |i, j| if i == j { w[i] } else { 0.0 });
        let gt = g.transpose();
        let hat = g.matmul(&gauss_jordan_inverse(&gt.matmul(&wm).matmul(&g))).matmul(&gt).matmul(&wm);
        let fitted = hat.matvec(&r);
        let chi_oracle: f64 = (0..m).map(|i| w[i] * r[i] * (r[i] - fitted[i])).sum();
        worst_chi = worst_chi.max(rel(chi_square_statistic(&rx, &sats, &r, &w).unwrap(), chi_oracle));

        let got = normalized_residuals(&rx, &sats, &r, &w).unwrap();
        for i in 0..m {
            let e = r[i] - fitted[i];
            worst_lnr = worst_lnr.max(rel(got[i].unwrap(), w[i] * e * e / (1.0 - hat[(i, i)])));
        }
    }
    let mut worst_eig = 0.0f64;
    let mut worst_orth = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    for dim in 2..=60 {
        let s = SymMatrix::from_upper(dim, |_, _| rng.random_range(-1.0..1.0));
        let spec = sym_eig(&s).unwrap();
        let back = spec.reconstruct();
        let diff = Matrix::from_fn(dim, dim, |i, j| back[(i, j)] - s.get(i, j));
        worst_eig = worst_eig.max(diff.frobenius_norm() / s.frobenius_norm());
        for a in 0..dim {
            for b in 0..dim {
                let d: f64 = spec.vectors[a].iter().zip(&spec.vectors[b]).map(|(x, y)| x * y).sum();
                worst_orth = worst_orth.max((d - f64::from(u8::from(a == b))).abs());
            }
        }
    }
    outcome(
        worst_chi < 1e-8 && worst_lnr < 1e-8 && worst_eig < 1e-8 && worst_orth < 1e-9,
        format!(
            "max rel err vs explicit oracles over 100 instances: chi2 {worst_chi:.1e}, normalized residual {worst_lnr:.1e}; \
             sym_eig dims 2-60 reconstruction {worst_eig:.1e}, orthonormality {worst_orth:.1e} (need < 1e-8)"
        ),
    )
}

fn c8_complexity() -> Outcome {
    let mut violations = 0;
    let mut checked = 0;
    for f in [4u32, 16] {
        let rows = complexity_curves((10..=100).filter(|&m| m > f), f, 10).unwrap();
        for r in &rows {
            checked += 1;
            if !(r.edm < r.residual && r.residual < r.ss) {
                violations += 1;
            }
        }
    }
    let ss48 = ss_cost(48, 8);
    let bound = BigUint::from(370_000_000u64) * BigUint::from(48u32).pow(3);
    let sanity = edm_cost(48, 4) == BigUint::from(520_525u32) && residual_cost(10, 0, 10) == BigUint::from(10_000u32);
    outcome(
        violations == 0 && ss48 > bound && sanity,
        format!("EDM < residual(k=10) < SS on {checked} (m, f) pairs, {violations} violations; SS(48, 8) = {ss48:.3e} vs 3.7e8*48^3 = {bound:.3e}",
            ss48 = ss48.to_string().parse::<f64>().unwrap(),
            bound = bound.to_string().parse::<f64>().unwrap()),
    )
}

fn c9_solution_separation() -> Outcome {
    let n = 50;
    let mut ok = 0;
    for seed in 0..n {
        let k = seed as usize % 8;
        let e = random_sky_epoch(SEED + seed, &SkyEpochSpec::noiseless(8).with_fault(k, 500.0));
        let r = solution_separation_fde(&e, &SsConfig::fixed(2, 5.0, 5.0)).unwrap();
        ok += usize::from(r.exclusion_order == [k]);
    }
    let counts = [(10, 3, 175u128), (20, 4, 6195)];
    let counts_ok = counts
        .iter()
        .all(|&(m, f, c)| subset_count(m, f) == c && enumerate_subsets(m, f).count() as u128 == c);
    outcome(
        ok == n as usize && counts_ok,
        format!("m = 8, 500 m fault, T_d = T_e = 5: exact in {ok}/{n} epochs; subset counts (10,3) = 175, (20,4) = 6195 enumerated: {counts_ok}"),
    )
}

fn c10_u_shape(s: &Sweep) -> Outcome {
    let (t, best, curve) = calibrated(&s.epochs, &s.edm);
    let first = curve.first().unwrap().1;
    let last = curve.last().unwrap().1;
    let interior = best < first && best < last;
    let baseline = baseline_error(&s.epochs);
    outcome(
        interior && best < baseline,
        format!(
            "edm grand-mean horizontal error over {} thresholds: low end {first:.1} m, min {best:.1} m at {t:.2e}, high end {last:.1} m; no exclusion {baseline:.1} m",
            curve.len()
        ),
    )
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    if args.iter().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let mut failed = Vec::new();
    let mut run = |id: u32, name: &str, limit_s: Option<f64>, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let mut o = f();
        let elapsed = start.elapsed().as_secs_f64();
        if let Some(limit) = limit_s {
            if elapsed >= limit {
                o.pass = false;
                o.detail.push_str(&format!("; runtime over {limit} s"));
            }
        }
        report(id, name, &o, elapsed);
        if !o.pass {
            failed.push(id);
        }
    };

    run(1, "rank/detection property", Some(10.0), &mut c1_rank_property);
    run(2, "eigenvalue pair growth", Some(30.0), &mut c2_eigenvalue_pair);
    run(3, "exclusion correctness", None, &mut c3_exclusion);

    let cfg = desk_config();
    let start = Instant::now();
    let desk = sweep(&cfg, &FdeOptions::default());
    let sweep_s = start.elapsed().as_secs_f64();
    run(4, "AUC parity", Some(600.0), &mut || {
        let mut o = c4_auc_parity(&desk, &cfg);
        o.detail.push_str(&format!("; {} epochs, sweep {sweep_s:.1} s", desk.epochs.len()));
        o
    });
    run(5, "AUC monotone in bias", None, &mut c5_auc_monotone);
    run(6, "timing ordering", None, &mut || c6_timing(&desk));
    run(7, "oracle equivalence", None, &mut c7_oracles);
    run(8, "complexity formulas", None, &mut c8_complexity);
    run(9, "solution separation", None, &mut c9_solution_separation);
    run(10, "threshold U-shape", None, &mut || c10_u_shape(&desk));

    if failed.is_empty() {
        println!("acceptance: all criteria passed");
    } else {
        println!("acceptance: failing criteria {failed:?}");
        std::process::exit(1);
    }
}
