//! Small dense matrices and a one-sided Jacobi singular value routine.

use serde::{Deserialize, Serialize};

use crate::scalar::Real;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    /// Builds from row-major data. Panics if the length does not match.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length mismatch");
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Self::from_row_major(r, c, data)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, col: &[T]) {
        for (i, &v) in col.iter().enumerate() {
            self[(i, j)] = v;
        }
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

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = self[(i, l)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] = out[(i, j)] + a * other[(l, j)];
                }
            }
        }
        out
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| v * s).collect(),
        }
    }

    pub fn frobenius_norm_sq(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, &v| acc + v * v)
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |acc, (&a, &b)| acc.max((a - b).abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    /// Determinant of a square matrix by partial-pivot elimination.
    pub fn determinant(&self) -> T {
        assert_eq!(self.rows, self.cols, "determinant of non-square matrix");
        let n = self.rows;
        let mut a = self.data.clone();
        let mut det = T::one();
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| {
                    a[i * n + k]
                        .abs()
                        .partial_cmp(&a[j * n + k].abs())
                        .unwrap_or(std::cmp::Ordering::Equal)
                })
                .unwrap_or(k);
            if a[p * n + k] == T::zero() {
                return T::zero();
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                det = -det;
            }
            let piv = a[k * n + k];
            det = det * piv;
            for i in (k + 1)..n {
                let f = a[i * n + k] / piv;
                for j in k..n {
                    a[i * n + j] = a[i * n + j] - f * a[k * n + j];
                }
            }
        }
        det
    }

    /// Inverse of a square matrix by Gauss-Jordan elimination with partial pivoting.
    /// Returns `None` for numerically singular input.
    pub fn inverse(&self) -> Option<Self> {
        assert_eq!(self.rows, self.cols, "inverse of non-square matrix");
        let n = self.rows;
        let mut a = self.data.clone();
        let mut inv = Self::identity(n).data;
        for k in 0..n {
            let p = (k..n).max_by(|&i, &j| {
                a[i * n + k]
                    .abs()
                    .partial_cmp(&a[j * n + k].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })?;
            let piv = a[p * n + k];
            if piv.abs() <= T::min_positive_value() {
                return None;
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                    inv.swap(k * n + j, p * n + j);
                }
            }
            let piv = a[k * n + k];
            for j in 0..n {
                a[k * n + j] = a[k * n + j] / piv;
                inv[k * n + j] = inv[k * n + j] / piv;
            }
            for i in 0..n {
                if i == k {
                    continue;
                }
                let f = a[i * n + k];
                if f == T::zero() {
                    continue;
                }
                for j in 0..n {
                    a[i * n + j] = a[i * n + j] - f * a[k * n + j];
                    inv[i * n + j] = inv[i * n + j] - f * inv[k * n + j];
                }
            }
        }
        Some(Self::from_row_major(n, n, inv))
    }
}

impl<T> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

const MAX_SWEEPS: usize = 80;

/// Singular values in non-increasing order, `min(rows, cols)` of them.
///
/// One-sided Jacobi (Hestenes) on the columns of `A` or `Aᵀ`, whichever is tall.
/// Accurate to a few ulps relative to `σ₁` for the small matrices used here.
pub fn singular_values<T: Real>(a: &Matrix<T>) -> Vec<T> {
    // Columns of `b` are orthogonalised; b is tall (rows >= cols).
    let b = if a.rows() >= a.cols() {
        a.clone()
    } else {
        a.transpose()
    };
    let (m, p) = (b.rows(), b.cols());
    // Column-major copy for cache friendliness.
    let mut cols: Vec<Vec<T>> = (0..p).map(|j| b.column(j)).collect();
    let eps = T::epsilon();
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..p {
            for j in (i + 1)..p {
                let (mut alpha, mut beta, mut gamma) = (T::zero(), T::zero(), T::zero());
                for r in 0..m {
                    let (x, y) = (cols[i][r], cols[j][r]);
                    alpha = alpha + x * x;
                    beta = beta + y * y;
                    gamma = gamma + x * y;
                }
                if gamma == T::zero() || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (gamma + gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                let (left, right) = cols.split_at_mut(j);
                let (ci, cj) = (&mut left[i], &mut right[0]);
                for r in 0..m {
                    let (x, y) = (ci[r], cj[r]);
                    ci[r] = c * x - s * y;
                    cj[r] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<T> = cols
        .iter()
        .map(|c| c.iter().fold(T::zero(), |acc, &v| acc + v * v).sqrt())
        .collect();
    sv.sort_by(|x, y| y.partial_cmp(x).unwrap_or(std::cmp::Ordering::Equal));
    sv
}

/// Number of singular values above `rel_tol · σ₁` (zero when `σ₁ = 0`).
pub fn numerical_rank<T: Real>(singular_values: &[T], rel_tol: T) -> usize {
    match singular_values.first() {
        Some(&s1) if s1 > T::zero() => singular_values
            .iter()
            .filter(|&&s| s > rel_tol * s1)
            .count(),
        _ => 0,
    }
}

/// Ratio `σ_{idx+1} / σ₁` (1-based `idx+1`), zero for the zero matrix.
pub fn relative_singular_value<T: Real>(singular_values: &[T], idx: usize) -> T {
    match (singular_values.first(), singular_values.get(idx)) {
        (Some(&s1), Some(&s)) if s1 > T::zero() => s / s1,
        _ => T::zero(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_block_has_unit_singular_values() {
        let mut a = Matrix::<f64>::zeros(4, 5);
        for i in 0..4 {
            a[(i, i)] = 1.0;
        }
        let sv = singular_values(&a);
        assert_eq!(sv.len(), 4);
        for s in sv {
            assert!((s - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_matrix() {
        let sv = singular_values(&Matrix::<f64>::zeros(4, 5));
        assert_eq!(sv, vec![0.0; 4]);
        assert_eq!(numerical_rank(&sv, 1e-6), 0);
    }

    #[test]
    fn rank_counts() {
        assert_eq!(numerical_rank(&[1.0, 1e-3, 1e-9], 1e-6), 2);
        assert_eq!(numerical_rank::<f64>(&[], 1e-6), 0);
    }

    #[test]
    fn determinant_and_inverse() {
        let a = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]);
        assert!((a.determinant() - 5.0f64).abs() < 1e-14);
        let inv = a.inverse().unwrap();
        let id = a.mul(&inv);
        assert!(id.max_abs_diff(&Matrix::identity(2)) < 1e-14);
        let sing = Matrix::from_rows(&[vec![1.0f64, 2.0], vec![2.0, 4.0]]);
        assert!(sing.inverse().is_none() || sing.determinant().abs() < 1e-14);
    }

    #[test]
    fn works_in_single_precision() {
        let a = Matrix::from_rows(&[vec![3.0f32, 0.0], vec![0.0, -4.0]]);
        let sv = singular_values(&a);
        assert!((sv[0] - 4.0).abs() < 1e-6 && (sv[1] - 3.0).abs() < 1e-6);
    }
}
