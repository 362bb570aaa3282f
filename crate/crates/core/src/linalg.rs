//! Small dense linear algebra: matrices, partial-pivot solves, spectral norms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::point::{dot, norm};

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        if r == 0 {
            return Err(Error::invalid("matrix", "no rows"));
        }
        let c = rows[0].len();
        if c == 0 {
            return Err(Error::invalid("matrix", "no columns"));
        }
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(Error::DimensionMismatch {
                    expected: c,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::non_finite("matrix entries"));
        }
        Ok(Matrix { rows: r, cols: c, data })
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::non_finite("matrix entries"));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn scaled(&self, s: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| s * v).collect(),
        }
    }

    /// `out = self * x`.
    #[inline]
    pub fn mul_vec_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (o, row) in out.iter_mut().zip(self.data.chunks_exact(self.cols)) {
            *o = dot(row, x);
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        self.mul_vec_into(x, &mut out);
        out
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| *v == 0.0)
    }

    /// Solves `self * z = rhs` by Gaussian elimination with partial pivoting.
    ///
    /// A pivot below `1e-14 * max|a_ij|` is reported as singular together
    /// with its magnitude.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        if !self.is_square() {
            return Err(Error::invalid("matrix", "solve needs a square matrix"));
        }
        let n = self.rows;
        if rhs.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: rhs.len(),
            });
        }
        let scale = self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let threshold = 1e-14 * scale.max(f64::MIN_POSITIVE);
        let mut a = self.data.clone();
        let mut b = rhs.to_vec();
        for col in 0..n {
            let (piv_row, piv_val) = (col..n)
                .map(|r| (r, a[r * n + col].abs()))
                .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if piv_val <= threshold {
                return Err(Error::SingularSystem { pivot: piv_val });
            }
            if piv_row != col {
                for j in 0..n {
                    a.swap(col * n + j, piv_row * n + j);
                }
                b.swap(col, piv_row);
            }
            let p = a[col * n + col];
            for r in col + 1..n {
                let factor = a[r * n + col] / p;
                if factor != 0.0 {
                    for j in col..n {
                        a[r * n + j] -= factor * a[col * n + j];
                    }
                    b[r] -= factor * b[col];
                }
            }
        }
        let mut z = vec![0.0; n];
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| a[i * n + j] * z[j]).sum();
            z[i] = (b[i] - s) / a[i * n + i];
        }
        Ok(z)
    }

    /// Largest singular value by power iteration on `AᵀA`.
    ///
    /// Relative tolerance `1e-10`, at most `1e5` iterations. The start
    /// vector is `e_1` plus a small fixed perturbation with every entry
    /// nonzero, so it is not orthogonal to the dominant right singular
    /// space of structured (e.g. diagonal) matrices.
    pub fn spectral_norm(&self) -> f64 {
        const TOL: f64 = 1e-10;
        const MAX_ITERS: usize = 100_000;
        if self.is_zero() {
            return 0.0;
        }
        let n = self.cols;
        let at = self.transpose();
        let mut v: Vec<f64> = (0..n)
            .map(|j| 1e-2 * (0.1 + (0.618_033_988_75 * (j + 1) as f64).fract()))
            .collect();
        v[0] += 1.0;
        let mut av = vec![0.0; self.rows];
        let mut w = vec![0.0; n];
        let mut sigma = 0.0;
        for _ in 0..MAX_ITERS {
            let nv = norm(&v);
            v.iter_mut().for_each(|x| *x /= nv);
            self.mul_vec_into(&v, &mut av);
            let next = norm(&av);
            at.mul_vec_into(&av, &mut w);
            std::mem::swap(&mut v, &mut w);
            if (next - sigma).abs() <= TOL * next {
                sigma = next;
                break;
            }
            sigma = next;
        }
        sigma
    }

    /// Smallest eigenvalue of the symmetric part `(A + Aᵀ)/2` via cyclic Jacobi.
    pub fn min_symmetric_eigenvalue(&self) -> Result<f64> {
        if !self.is_square() {
            return Err(Error::invalid("matrix", "eigenvalues need a square matrix"));
        }
        let n = self.rows;
        let mut s = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                s[i * n + j] = 0.5 * (self[(i, j)] + self[(j, i)]);
            }
        }
        for _sweep in 0..100 {
            let off: f64 = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| s[i * n + j] * s[i * n + j])
                .sum();
            if off < 1e-30 {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    let apq = s[p * n + q];
                    if apq.abs() < 1e-300 {
                        continue;
                    }
                    let theta = (s[q * n + q] - s[p * n + p]) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let sn = t * c;
                    for k in 0..n {
                        let skp = s[k * n + p];
                        let skq = s[k * n + q];
                        s[k * n + p] = c * skp - sn * skq;
                        s[k * n + q] = sn * skp + c * skq;
                    }
                    for k in 0..n {
                        let spk = s[p * n + k];
                        let sqk = s[q * n + k];
                        s[p * n + k] = c * spk - sn * sqk;
                        s[q * n + k] = sn * spk + c * sqk;
                    }
                }
            }
        }
        Ok((0..n).map(|i| s[i * n + i]).fold(f64::INFINITY, f64::min))
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

impl TryFrom<Vec<Vec<f64>>> for Matrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Matrix::from_rows(&rows)
    }
}

impl From<Matrix> for Vec<Vec<f64>> {
    fn from(m: Matrix) -> Self {
        m.to_rows()
    }
}
