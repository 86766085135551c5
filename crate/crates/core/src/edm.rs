//! Greedy Euclidean-distance-matrix fault detection and exclusion.
//!
//! The receiver and the satellites form a point set whose squared pairwise
//! distances are known: satellite-to-satellite from ephemeris and
//! receiver-to-satellite from conditioned pseudoranges. Double centering the
//! distance matrix gives a Gram matrix of rank 3 when every distance is
//! consistent. A biased pseudorange lifts the 4th and 5th eigenvalues
//! together, and the rows of the matching eigenvectors point at the satellite
//! responsible.

use crate::clock::Stopwatch;
use crate::error::{FdeError, Result};
use crate::geodesy::Ecef;
use crate::linalg::{sym_eig, thin_qr, Matrix, Spectrum, SymMatrix};
use crate::measurement::{EpochSet, FdeMethod, FdeResult};

/// Embedding dimension for 3-D positioning.
pub const SPACE_DIM: usize = 3;
/// Greedy loops stop once this many measurements remain.
pub const MIN_MEASUREMENTS: usize = 4;

/// Squared-distance matrix over the receiver (index 0) and the satellites
/// (indexes `1..=m`).
#[derive(Debug, Clone, PartialEq)]
pub struct EuclideanDistanceMatrix(SymMatrix);

impl EuclideanDistanceMatrix {
    /// Builds the matrix from satellite positions and receiver ranges without
    /// any minimum-size requirement.
    pub fn from_ranges(sat_pos: &[Ecef], ranges: &[f64]) -> Self {
        assert_eq!(sat_pos.len(), ranges.len(), "one range per satellite");
        Self(SymMatrix::from_upper(sat_pos.len() + 1, |i, j| match (i, j) {
            _ if i == j => 0.0,
            (0, j) => ranges[j - 1] * ranges[j - 1],
            (i, j) => {
                let (a, b) = (&sat_pos[i - 1], &sat_pos[j - 1]);
                let d = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
                d[0] * d[0] + d[1] * d[1] + d[2] * d[2]
            }
        }))
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0.get(i, j)
    }

    pub fn as_sym(&self) -> &SymMatrix {
        &self.0
    }
}

/// Distance matrix of an epoch using its conditioned pseudoranges.
pub fn build_edm(epoch: &EpochSet) -> Result<EuclideanDistanceMatrix> {
    if epoch.len() < MIN_MEASUREMENTS {
        return Err(FdeError::TooFewMeasurements {
            got: epoch.len(),
            need: MIN_MEASUREMENTS,
        });
    }
    Ok(EuclideanDistanceMatrix::from_ranges(
        &epoch.sat_positions(),
        &epoch.conditioned_pseudoranges(),
    ))
}

/// `G = −½ J D J` with `J = I − (1/N)·11ᵀ`, `N = dim(D)`.
pub fn gram_from_edm(d: &EuclideanDistanceMatrix) -> SymMatrix {
    let n = d.dim();
    let inv_n = 1.0 / n as f64;
    let row_means: Vec<f64> = d
        .as_sym()
        .row_sums()
        .into_iter()
        .map(|s| s * inv_n)
        .collect();
    let grand_mean = row_means.iter().sum::<f64>() * inv_n;
    SymMatrix::from_upper(n, |i, j| {
        -0.5 * (d.get(i, j) - row_means[i] - row_means[j] + grand_mean)
    })
}

/// `(|λ_{n+1}| + |λ_{n+2}|) / (2|λ_1|)` over magnitude-ordered eigenvalues.
pub fn detection_statistic(spec: &Spectrum, n: usize) -> Result<f64> {
    if spec.dim() < n + 2 {
        return Err(FdeError::InsufficientDimension(format!(
            "need {} eigenvalues, spectrum has {}",
            n + 2,
            spec.dim()
        )));
    }
    let lead = spec.values[0].abs();
    if lead == 0.0 {
        return Ok(0.0);
    }
    Ok((spec.values[n].abs() + spec.values[n + 1].abs()) / (2.0 * lead))
}

/// Legacy statistic: `|λ_{n+1}| · mean(|λ_{n+1}|..|λ_m|) / |λ_1|`.
pub fn detection_statistic_2021(spec: &Spectrum, n: usize, m: usize) -> Result<f64> {
    if m <= n {
        return Err(FdeError::InsufficientDimension(format!(
            "measurement count {m} must exceed dimension {n}"
        )));
    }
    if spec.dim() < m {
        return Err(FdeError::InsufficientDimension(format!(
            "need {m} eigenvalues, spectrum has {}",
            spec.dim()
        )));
    }
    let lead = spec.values[0].abs();
    if lead == 0.0 {
        return Ok(0.0);
    }
    let tail_mean = spec.values[n..m].iter().map(|v| v.abs()).sum::<f64>() / (m - n) as f64;
    Ok(spec.values[n].abs() * tail_mean / lead)
}

/// Per-row score `(|q_{n+1,i}| + |q_{n+2,i}|) / 2`. Row 0 is the receiver.
pub fn exclusion_scores(spec: &Spectrum, n: usize) -> Result<Vec<f64>> {
    if spec.vectors.len() < n + 2 {
        return Err(FdeError::InsufficientDimension(format!(
            "need eigenvectors {} and {}, spectrum has {}",
            n + 1,
            n + 2,
            spec.vectors.len()
        )));
    }
    let (a, b) = (&spec.vectors[n], &spec.vectors[n + 1]);
    Ok(a.iter().zip(b).map(|(x, y)| 0.5 * (x.abs() + y.abs())).collect())
}

/// Satellite rows ranked by exclusion score, highest first; ties go to the
/// lower row. The receiver row never appears.
pub fn ranked_exclusion_rows(spec: &Spectrum, n: usize) -> Result<Vec<usize>> {
    let scores = exclusion_scores(spec, n)?;
    let mut rows: Vec<usize> = (1..scores.len()).collect();
    rows.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    Ok(rows)
}

/// Gram-matrix row (≥ 1) of the satellite most implicated in the fault.
pub fn exclusion_candidate(spec: &Spectrum, n: usize) -> Result<usize> {
    ranked_exclusion_rows(spec, n)?
        .first()
        .copied()
        .ok_or_else(|| FdeError::InsufficientDimension("no satellite rows".into()))
}

/// How the Gram spectrum is computed inside the greedy loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SpectralBackend {
    /// Build the distance matrix, double center it and run Jacobi on the
    /// full `(m+1)×(m+1)` Gram matrix.
    Dense,
    /// Exact reduction to a 5×5 eigenproblem.
    ///
    /// With the receiver hypothesized at the ECEF origin, `D` differs from a
    /// consistent distance matrix only in row and column 0, so
    /// `G = JPPᵀJ − ½(Je₀(Jδ)ᵀ + Jδ(Je₀)ᵀ)` where `P` stacks the point
    /// coordinates and `δᵢ = ρᵢ² − ‖sᵢ‖²`. Its range lies in the span of five
    /// known vectors; a thin QR of those vectors turns the problem into a
    /// 5×5 Jacobi solve. All other eigenvalues are exactly zero.
    #[default]
    Factored,
}

/// Magnitude-ordered spectrum of the double-centered distance matrix.
pub fn gram_spectrum(sat_pos: &[Ecef], ranges: &[f64], backend: SpectralBackend) -> Result<Spectrum> {
    match backend {
        SpectralBackend::Dense => {
            let d = EuclideanDistanceMatrix::from_ranges(sat_pos, ranges);
            sym_eig(&gram_from_edm(&d))
        }
        SpectralBackend::Factored => factored_spectrum(sat_pos, ranges),
    }
}

const FACTOR_RANK: usize = SPACE_DIM + 2;

fn factored_spectrum(sat_pos: &[Ecef], ranges: &[f64]) -> Result<Spectrum> {
    let m = sat_pos.len();
    let n = m + 1;
    if n < FACTOR_RANK {
        // Too small to benefit; the dense route is exact as well.
        return sym_eig(&gram_from_edm(&EuclideanDistanceMatrix::from_ranges(sat_pos, ranges)));
    }
    for (i, &r) in ranges.iter().enumerate() {
        if !r.is_finite() || sat_pos[i].iter().any(|x| !x.is_finite()) {
            return Err(FdeError::InvalidMatrix { row: 0, col: i + 1 });
        }
    }

    // Columns: centered x, y, z (receiver hypothesis at the origin), Je0, Jδ.
    let mut u = Matrix::zeros(n, FACTOR_RANK);
    for i in 1..n {
        let s = &sat_pos[i - 1];
        for c in 0..SPACE_DIM {
            u[(i, c)] = s[c];
        }
        u[(i, 4)] = ranges[i - 1] * ranges[i - 1] - (s[0] * s[0] + s[1] * s[1] + s[2] * s[2]);
    }
    u[(0, 3)] = 1.0;
    let mut scale = [0.0; FACTOR_RANK];
    for c in 0..FACTOR_RANK {
        let mean = (0..n).map(|i| u[(i, c)]).sum::<f64>() / n as f64;
        for i in 0..n {
            u[(i, c)] -= mean;
        }
        let norm = (0..n).map(|i| u[(i, c)] * u[(i, c)]).sum::<f64>().sqrt();
        scale[c] = norm;
        if norm > 0.0 {
            for i in 0..n {
                u[(i, c)] /= norm;
            }
        }
    }

    // Core matrix of G = U C Uᵀ, expressed in the column-normalized basis.
    let mut core = Matrix::zeros(FACTOR_RANK, FACTOR_RANK);
    for c in 0..SPACE_DIM {
        core[(c, c)] = scale[c] * scale[c];
    }
    core[(3, 4)] = -0.5 * scale[3] * scale[4];
    core[(4, 3)] = core[(3, 4)];

    let (q, r) = thin_qr(&u);
    let h = r.matmul(&core).matmul(&r.transpose());
    let small = sym_eig(&SymMatrix::symmetrize(&h))?;

    let mut values = small.values;
    values.resize(n, 0.0);
    let vectors = small.vectors.iter().map(|y| q.matvec(y)).collect();
    Ok(Spectrum::from_unsorted(values, vectors))
}

/// Which detection statistic drives the greedy loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EdmStatistic {
    /// Mean of the `(n+1)`-th and `(n+2)`-th eigenvalue magnitudes.
    #[default]
    Pair,
    /// The 2021 product statistic.
    Legacy2021,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdmOptions {
    pub dim: usize,
    pub max_faults: Option<usize>,
    pub removals_per_iter: usize,
    pub statistic: EdmStatistic,
    pub backend: SpectralBackend,
}

impl Default for EdmOptions {
    fn default() -> Self {
        Self {
            dim: SPACE_DIM,
            max_faults: None,
            removals_per_iter: 1,
            statistic: EdmStatistic::Pair,
            backend: SpectralBackend::default(),
        }
    }
}

impl EdmOptions {
    pub fn legacy_2021() -> Self {
        Self {
            statistic: EdmStatistic::Legacy2021,
            ..Self::default()
        }
    }
}

fn statistic_for(spec: &Spectrum, opts: &EdmOptions, m: usize) -> Result<f64> {
    match opts.statistic {
        EdmStatistic::Pair => detection_statistic(spec, opts.dim),
        EdmStatistic::Legacy2021 => detection_statistic_2021(spec, opts.dim, m),
    }
}

/// Greedy EDM fault detection and exclusion.
///
/// Repeats detect-then-exclude until the statistic falls below `threshold`,
/// only four satellites remain, or `max_faults` removals have been made.
pub fn greedy_edm_fde(epoch: &EpochSet, threshold: f64, opts: &EdmOptions) -> Result<FdeResult> {
    if !(threshold > 0.0) {
        return Err(FdeError::InvalidArgument(format!(
            "threshold must be positive, got {threshold}"
        )));
    }
    if opts.statistic == EdmStatistic::Pair && threshold >= 1.0 {
        return Err(FdeError::InvalidArgument(format!(
            "pair statistic threshold must lie in (0, 1), got {threshold}"
        )));
    }
    if opts.removals_per_iter == 0 {
        return Err(FdeError::InvalidArgument("removals_per_iter must be >= 1".into()));
    }
    if epoch.len() < MIN_MEASUREMENTS {
        return Err(FdeError::TooFewMeasurements {
            got: epoch.len(),
            need: MIN_MEASUREMENTS,
        });
    }

    let method = match opts.statistic {
        EdmStatistic::Pair => FdeMethod::Edm,
        EdmStatistic::Legacy2021 => FdeMethod::Edm2021,
    };
    let mut result = FdeResult::new(method, epoch);
    let timer = Stopwatch::start();

    let all_pos = epoch.sat_positions();
    let all_ranges = epoch.conditioned_pseudoranges();
    let mut active: Vec<usize> = (0..epoch.len()).collect();

    let spectrum_of = |active: &[usize]| {
        let pos: Vec<Ecef> = active.iter().map(|&i| all_pos[i]).collect();
        let ranges: Vec<f64> = active.iter().map(|&i| all_ranges[i]).collect();
        gram_spectrum(&pos, &ranges, opts.backend)
    };

    let mut spec = spectrum_of(&active)?;
    let mut stat = statistic_for(&spec, opts, active.len())?;
    result.statistic_trace.push(stat);

    while active.len() > MIN_MEASUREMENTS && stat >= threshold {
        let budget = opts
            .max_faults
            .map_or(usize::MAX, |f| f.saturating_sub(result.exclusion_order.len()));
        if budget == 0 {
            break;
        }
        let count = opts
            .removals_per_iter
            .min(active.len() - MIN_MEASUREMENTS)
            .min(budget);
        let rows = ranked_exclusion_rows(&spec, opts.dim)?;
        let mut removed: Vec<usize> = rows[..count].iter().map(|&row| row - 1).collect();
        for &pos in &removed {
            result.exclude(active[pos]);
        }
        removed.sort_unstable_by(|a, b| b.cmp(a));
        for pos in removed {
            active.remove(pos);
        }

        spec = spectrum_of(&active)?;
        stat = statistic_for(&spec, opts, active.len())?;
        result.statistic_trace.push(stat);
    }

    result.wall_time_s = timer.elapsed_s();
    Ok(result)
}
