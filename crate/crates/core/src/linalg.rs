//! Dense kernels: symmetric eigendecomposition by cyclic Jacobi rotations and
//! weighted least-squares solves through the normal equations.
//!
//! Every matrix in this crate is small (at most a few dozen rows), so the
//! storage is a plain row-major `Vec<f64>`.

use std::ops::{Index, IndexMut};

use crate::error::{FdeError, Result};

/// Off-diagonal Frobenius tolerance for Jacobi, relative to `‖S‖_F`.
pub const JACOBI_TOLERANCE: f64 = 1e-12;
/// Maximum number of Jacobi sweeps.
pub const JACOBI_MAX_SWEEPS: usize = 100;
/// Normal matrices whose 1-norm condition estimate exceeds this are singular.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from equally long rows. Panics on ragged input.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        Self {
            rows: rows.len(),
            cols,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "dimension mismatch in matmul");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len(), "dimension mismatch in matvec");
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Maximum absolute column sum.
    pub fn norm_1(&self) -> f64 {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Square symmetric matrix. Symmetry is exact: only the upper triangle is
/// ever computed and it is mirrored on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(Matrix);

impl SymMatrix {
    /// Fills the upper triangle (including the diagonal) from `f` and mirrors it.
    pub fn from_upper(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(dim >= 1, "SymMatrix must have dim >= 1");
        let mut m = Matrix::zeros(dim, dim);
        for i in 0..dim {
            for j in i..dim {
                let v = f(i, j);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Self(m)
    }

    /// Wraps a square matrix, averaging `a_ij` and `a_ji` so the result is
    /// exactly symmetric.
    pub fn symmetrize(m: &Matrix) -> Self {
        assert_eq!(m.rows(), m.cols(), "SymMatrix must be square");
        Self::from_upper(m.rows(), |i, j| 0.5 * (m[(i, j)] + m[(j, i)]))
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.frobenius_norm()
    }

    /// `‖S·1‖` for every row, i.e. the row sums.
    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.0.row(i).iter().sum()).collect()
    }
}

/// Eigenvalues ordered by descending magnitude with their unit eigenvectors.
///
/// `vectors[k]` pairs with `values[k]`. A spectrum produced by a reduced
/// (low-rank) factorization may carry fewer vectors than values; the values
/// past `vectors.len()` are then structural zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Sorts pairs by descending `|value|`; equal magnitudes keep their
    /// original relative order.
    pub(crate) fn from_unsorted(values: Vec<f64>, vectors: Vec<Vec<f64>>) -> Self {
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&a, &b| values[b].abs().total_cmp(&values[a].abs()));
        let stored = vectors.len();
        let mut vectors = vectors.into_iter().map(Some).collect::<Vec<_>>();
        let mut sorted_vectors = Vec::with_capacity(stored);
        for &k in order.iter().filter(|&&k| k < stored) {
            sorted_vectors.push(vectors[k].take().expect("each vector taken once"));
        }
        Self {
            values: order.iter().map(|&k| values[k]).collect(),
            vectors: sorted_vectors,
        }
    }

    /// `Σ_k λ_k v_k v_kᵀ` over the stored vectors.
    pub fn reconstruct(&self) -> Matrix {
        let n = self.dim();
        let mut out = Matrix::zeros(n, n);
        for (lambda, v) in self.values.iter().zip(&self.vectors) {
            for i in 0..n {
                let a = lambda * v[i];
                for j in 0..n {
                    out[(i, j)] += a * v[j];
                }
            }
        }
        out
    }
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
///
/// Sweeps visit `(p, q)` pairs in row order, so the result is a deterministic
/// function of the input bits. Stops once the off-diagonal Frobenius norm falls
/// below `1e-12·‖S‖_F` or after 100 sweeps.
pub fn sym_eig(s: &SymMatrix) -> Result<Spectrum> {
    let n = s.dim();
    for i in 0..n {
        for j in i..n {
            if !s.get(i, j).is_finite() {
                return Err(FdeError::InvalidMatrix { row: i, col: j });
            }
        }
    }

    let mut a = s.as_matrix().clone();
    let mut v = Matrix::identity(n);
    let tol = JACOBI_TOLERANCE * s.frobenius_norm();

    for _ in 0..JACOBI_MAX_SWEEPS {
        if off_diagonal_norm(&a) <= tol {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }

    let values = (0..n).map(|i| a[(i, i)]).collect();
    let vectors = (0..n).map(|k| (0..n).map(|i| v[(i, k)]).collect()).collect();
    Ok(Spectrum::from_unsorted(values, vectors))
}

fn off_diagonal_norm(a: &Matrix) -> f64 {
    let n = a.rows();
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sum += a[(i, j)] * a[(i, j)];
            }
        }
    }
    sum.sqrt()
}

/// Annihilates `a[p][q]` with one plane rotation and accumulates it into `v`.
fn rotate(a: &mut Matrix, v: &mut Matrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    if apq == 0.0 {
        return;
    }
    let app = a[(p, p)];
    let aqq = a[(q, q)];
    let theta = (aqq - app) / (2.0 * apq);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    let n = a.rows();

    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = c * akp - s * akq;
        a[(k, q)] = s * akp + c * akq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = c * apk - s * aqk;
        a[(q, k)] = s * apk + c * aqk;
    }
    a[(p, q)] = 0.0;
    a[(q, p)] = 0.0;

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}

/// Inverse of a symmetric positive definite matrix via Cholesky.
///
/// Fails with `SingularGeometry` when the factorization breaks down or the
/// 1-norm condition estimate exceeds [`CONDITION_LIMIT`].
pub fn spd_inverse(m: &Matrix) -> Result<Matrix> {
    let n = m.rows();
    assert_eq!(n, m.cols(), "spd_inverse needs a square matrix");
    let l = cholesky(m).ok_or(FdeError::SingularGeometry {
        condition: f64::INFINITY,
    })?;

    let mut inv = Matrix::zeros(n, n);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e.iter_mut().for_each(|x| *x = 0.0);
        e[j] = 1.0;
        let col = cholesky_solve(&l, &e);
        for i in 0..n {
            inv[(i, j)] = col[i];
        }
    }
    let condition = m.norm_1() * inv.norm_1();
    if !condition.is_finite() || condition > CONDITION_LIMIT {
        return Err(FdeError::SingularGeometry { condition });
    }
    Ok(inv)
}

fn cholesky(m: &Matrix) -> Option<Matrix> {
    let n = m.rows();
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = m[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0) || !d.is_finite() {
            return None;
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in j + 1..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / djj;
        }
    }
    Some(l)
}

fn cholesky_solve(l: &Matrix, b: &[f64]) -> Vec<f64> {
    let n = l.rows();
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[(i, k)] * y[k];
        }
        y[i] = s / l[(i, i)];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[(k, i)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    x
}

/// `Aᵀ diag(w) A` and `Aᵀ diag(w) y`.
pub fn weighted_normal_equations(a: &Matrix, w: &[f64], y: &[f64]) -> (Matrix, Vec<f64>) {
    let (m, p) = (a.rows(), a.cols());
    assert_eq!(w.len(), m, "weight length mismatch");
    assert_eq!(y.len(), m, "observation length mismatch");
    let mut n = Matrix::zeros(p, p);
    let mut b = vec![0.0; p];
    for i in 0..m {
        let row = a.row(i);
        for r in 0..p {
            let wr = w[i] * row[r];
            b[r] += wr * y[i];
            for c in r..p {
                n[(r, c)] += wr * row[c];
            }
        }
    }
    for r in 0..p {
        for c in 0..r {
            n[(r, c)] = n[(c, r)];
        }
    }
    (n, b)
}

/// Minimizes `(y − Ax)ᵀ W (y − Ax)` for diagonal `W = diag(w)`.
pub fn weighted_normal_solve(a: &Matrix, w: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    if a.rows() < a.cols() {
        return Err(FdeError::TooFewMeasurements {
            got: a.rows(),
            need: a.cols(),
        });
    }
    if let Some(bad) = w.iter().find(|&&x| !(x > 0.0)) {
        return Err(FdeError::InvalidArgument(format!(
            "weights must be positive, got {bad}"
        )));
    }
    let (n, b) = weighted_normal_equations(a, w, y);
    let inv = spd_inverse(&n)?;
    Ok(inv.matvec(&b))
}

/// Thin Householder QR of a tall matrix: `A = Q R` with `Q` of size `m×k`
/// (orthonormal columns) and upper-triangular `R` of size `k×k`.
pub fn thin_qr(a: &Matrix) -> (Matrix, Matrix) {
    let (m, k) = (a.rows(), a.cols());
    assert!(m >= k, "thin_qr needs rows >= cols");
    let mut r = a.clone();
    let mut reflectors: Vec<Vec<f64>> = Vec::with_capacity(k);

    for j in 0..k {
        let norm = (j..m).map(|i| r[(i, j)] * r[(i, j)]).sum::<f64>().sqrt();
        let mut v: Vec<f64> = (j..m).map(|i| r[(i, j)]).collect();
        if norm == 0.0 {
            reflectors.push(Vec::new());
            continue;
        }
        let alpha = if v[0] >= 0.0 { -norm } else { norm };
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            reflectors.push(Vec::new());
            continue;
        }
        for c in j..k {
            let proj: f64 = (j..m).map(|i| v[i - j] * r[(i, c)]).sum::<f64>() * 2.0 / vnorm2;
            for i in j..m {
                r[(i, c)] -= proj * v[i - j];
            }
        }
        let scale = 1.0 / vnorm2.sqrt();
        v.iter_mut().for_each(|x| *x *= scale);
        reflectors.push(v);
    }

    // Q = H_0 H_1 ... H_{k-1} applied to the first k columns of the identity.
    let mut q = Matrix::from_fn(m, k, |i, j| if i == j { 1.0 } else { 0.0 });
    for j in (0..k).rev() {
        let v = &reflectors[j];
        if v.is_empty() {
            continue;
        }
        for c in 0..k {
            let proj: f64 = (j..m).map(|i| v[i - j] * q[(i, c)]).sum::<f64>() * 2.0;
            for i in j..m {
                q[(i, c)] -= proj * v[i - j];
            }
        }
    }
    let r_square = Matrix::from_fn(k, k, |i, j| if j >= i { r[(i, j)] } else { 0.0 });
    (q, r_square)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
pub(crate) mod oracle {
    use super::Matrix;

    /// Gauss-Jordan elimination with partial pivoting, independent of the
    /// Cholesky path used by the library.
    pub fn gauss_jordan_inverse(m: &Matrix) -> Matrix {
        let n = m.rows();
        let mut a = m.clone();
        let mut inv = Matrix::identity(n);
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&x, &y| a[(x, col)].abs().total_cmp(&a[(y, col)].abs()))
                .unwrap();
            for j in 0..n {
                let (t1, t2) = (a[(col, j)], a[(pivot, j)]);
                a[(col, j)] = t2;
                a[(pivot, j)] = t1;
                let (u1, u2) = (inv[(col, j)], inv[(pivot, j)]);
                inv[(col, j)] = u2;
                inv[(pivot, j)] = u1;
            }
            let d = a[(col, col)];
            for j in 0..n {
                a[(col, j)] /= d;
                inv[(col, j)] /= d;
            }
            for i in 0..n {
                if i != col {
                    let f = a[(i, col)];
                    for j in 0..n {
                        a[(i, j)] -= f * a[(col, j)];
                        inv[(i, j)] -= f * inv[(col, j)];
                    }
                }
            }
        }
        inv
    }
}
