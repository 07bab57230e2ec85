//! Dense row-major matrices and the Cholesky-based kernels used by the
//! Gaussian code paths: factorization, log-determinant and Mahalanobis
//! distances.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maximum tolerated `|a_ij - a_ji|` before a matrix is rejected as
/// non-symmetric.
pub const SYMMETRY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
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

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Builds a matrix from row-major data, rejecting non-finite entries.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteEntry {
                row: pos / cols.max(1),
                col: pos % cols.max(1),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    found: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Self::from_row_major(rows.len(), cols, data)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        // chunks_exact panics on a zero chunk size
        let cols = self.cols.max(1);
        self.data
            .chunks_exact(cols)
            .take(if self.cols == 0 { 0 } else { self.rows })
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: other.rows,
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let src = other.row(k);
                for (o, &b) in out.row_mut(i).iter_mut().zip(src) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &DenseMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Adds `eps` to every diagonal entry.
    pub fn add_diagonal(&mut self, eps: f64) {
        for i in 0..self.rows.min(self.cols) {
            self[(i, i)] += eps;
        }
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.row_iter().map(<[f64]>::to_vec).collect()
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

impl TryFrom<Vec<Vec<f64>>> for DenseMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_rows(&rows)
    }
}

impl From<DenseMatrix> for Vec<Vec<f64>> {
    fn from(m: DenseMatrix) -> Self {
        m.to_rows()
    }
}

/// Lower-triangular `L` with `L Lᵀ = A`.
#[derive(Debug, Clone, PartialEq)]
pub struct CholeskyFactor {
    lower: DenseMatrix,
}

impl CholeskyFactor {
    #[inline]
    pub fn dim(&self) -> usize {
        self.lower.rows()
    }

    #[inline]
    pub fn lower(&self) -> &DenseMatrix {
        &self.lower
    }

    /// `L Lᵀ`.
    pub fn reconstruct(&self) -> DenseMatrix {
        let n = self.dim();
        let mut out = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let s: f64 = (0..=j).map(|k| self.lower[(i, k)] * self.lower[(j, k)]).sum();
                out[(i, j)] = s;
                out[(j, i)] = s;
            }
        }
        out
    }

    /// Solves `L y = b` in place.
    pub fn forward_solve_in_place(&self, b: &mut [f64]) -> Result<()> {
        let n = self.dim();
        if b.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: b.len(),
            });
        }
        for i in 0..n {
            let row = self.lower.row(i);
            let mut s = b[i];
            for k in 0..i {
                s -= row[k] * b[k];
            }
            b[i] = s / row[i];
        }
        Ok(())
    }

    /// Computes `out = L z` for a vector `z`.
    pub fn lower_mul(&self, z: &[f64], out: &mut [f64]) {
        let n = self.dim();
        debug_assert_eq!(z.len(), n);
        for i in 0..n {
            let row = self.lower.row(i);
            out[i] = row[..=i].iter().zip(z).map(|(l, v)| l * v).sum();
        }
    }

    /// `A⁻¹` via two triangular solves per column.
    pub fn inverse(&self) -> DenseMatrix {
        let n = self.dim();
        let mut inv = DenseMatrix::zeros(n, n);
        let mut col = vec![0.0; n];
        for j in 0..n {
            col.iter_mut().for_each(|c| *c = 0.0);
            col[j] = 1.0;
            // dimensions always agree here
            let _ = self.forward_solve_in_place(&mut col);
            for i in (0..n).rev() {
                let mut s = col[i];
                for k in (i + 1)..n {
                    s -= self.lower[(k, i)] * col[k];
                }
                col[i] = s / self.lower[(i, i)];
            }
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        inv
    }
}

/// Cholesky factorization without pivoting. The input is symmetrized as
/// `(A + Aᵀ)/2` after the symmetry check.
pub fn cholesky(a: &DenseMatrix) -> Result<CholeskyFactor> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            expected: a.rows(),
            found: a.cols(),
        });
    }
    let asym = a.max_asymmetry();
    if asym > SYMMETRY_TOL {
        return Err(Error::NotSymmetric {
            max_asymmetry: asym,
        });
    }
    let n = a.rows();
    let mut l = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let mut pivot = a[(j, j)];
        for k in 0..j {
            pivot -= l[(j, k)] * l[(j, k)];
        }
        if !(pivot > 0.0) {
            return Err(Error::NotPositiveDefinite { index: j, pivot });
        }
        let d = pivot.sqrt();
        l[(j, j)] = d;
        for i in (j + 1)..n {
            let mut s = 0.5 * (a[(i, j)] + a[(j, i)]);
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    Ok(CholeskyFactor { lower: l })
}

/// `log det A = 2 Σ log L_ii`.
pub fn log_det(f: &CholeskyFactor) -> f64 {
    2.0 * (0..f.dim()).map(|i| f.lower[(i, i)].ln()).sum::<f64>()
}

/// `(x - μ)ᵀ A⁻¹ (x - μ)` with one forward solve.
pub fn mahalanobis_sq(x: &[f64], mu: &[f64], f: &CholeskyFactor) -> Result<f64> {
    let n = f.dim();
    if x.len() != n || mu.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: if x.len() != n { x.len() } else { mu.len() },
        });
    }
    let mut v: Vec<f64> = x.iter().zip(mu).map(|(a, b)| a - b).collect();
    f.forward_solve_in_place(&mut v)?;
    Ok(v.iter().map(|t| t * t).sum())
}

/// Same as [`mahalanobis_sq`] but reuses a scratch buffer; dimensions are
/// the caller's responsibility.
#[inline]
pub(crate) fn mahalanobis_sq_unchecked(
    x: &[f64],
    mu: &[f64],
    f: &CholeskyFactor,
    scratch: &mut [f64],
) -> f64 {
    let n = f.dim();
    for i in 0..n {
        let row = f.lower.row(i);
        let mut s = x[i] - mu[i];
        for k in 0..i {
            s -= row[k] * scratch[k];
        }
        scratch[i] = s / row[i];
    }
    scratch[..n].iter().map(|t| t * t).sum()
}

/// Sample mean and maximum-likelihood covariance (normalized by `n`).
pub fn mean_and_covariance(data: &DenseMatrix) -> (Vec<f64>, DenseMatrix) {
    let n = data.rows();
    let p = data.cols();
    let mut mean = vec![0.0; p];
    for row in data.row_iter() {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n.max(1) as f64);
    let mut cov = DenseMatrix::zeros(p, p);
    let mut centered = vec![0.0; p];
    for row in data.row_iter() {
        for ((c, v), m) in centered.iter_mut().zip(row).zip(&mean) {
            *c = v - m;
        }
        for i in 0..p {
            let ci = centered[i];
            for j in 0..=i {
                cov[(i, j)] += ci * centered[j];
            }
        }
    }
    for i in 0..p {
        for j in 0..=i {
            let v = cov[(i, j)] / n.max(1) as f64;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    (mean, cov)
}
