//! Small dense complex matrices.
//!
//! The model sizes are desk scale (a few thousand rows at most), so a
//! row-major `Vec` with naive products is all that is needed.

use std::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// Builds a matrix from row-major data.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension {
                context: "matrix data",
                expected: rows * cols,
                actual: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn diag(entries: &[Complex64]) -> Self {
        let mut m = Self::zeros(entries.len(), entries.len());
        for (i, &v) in entries.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[Complex64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn diagonal(&self) -> Vec<Complex64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn scale(&self, k: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| v * k).collect(),
        }
    }

    pub fn matvec(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() != self.cols {
            return Err(Error::Dimension {
                context: "matrix-vector product",
                expected: self.cols,
                actual: v.len(),
            });
        }
        Ok((0..self.rows)
            .map(|r| self.row(r).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn matmul(&self, rhs: &CMatrix) -> Result<CMatrix> {
        if rhs.rows != self.cols {
            return Err(Error::Dimension {
                context: "matrix product",
                expected: self.cols,
                actual: rhs.rows,
            });
        }
        let mut out = CMatrix::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for c in 0..rhs.cols {
                    out[(r, c)] += a * rhs[(k, c)];
                }
            }
        }
        Ok(out)
    }

    /// Largest absolute entry-wise difference.
    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex64;

    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

/// A 2×2 complex matrix, the shape of the prototype stream channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Matrix2(pub [[Complex64; 2]; 2]);

impl Matrix2 {
    pub fn identity() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        Matrix2([[one, zero], [zero, one]])
    }

    pub fn det(&self) -> Complex64 {
        let m = &self.0;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    pub fn mul_vec(&self, v: [Complex64; 2]) -> [Complex64; 2] {
        let m = &self.0;
        [
            m[0][0] * v[0] + m[0][1] * v[1],
            m[1][0] * v[0] + m[1][1] * v[1],
        ]
    }

    pub fn mul(&self, rhs: &Matrix2) -> Matrix2 {
        let (a, b) = (&self.0, &rhs.0);
        let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = a[r][0] * b[0][c] + a[r][1] * b[1][c];
            }
        }
        Matrix2(out)
    }

    /// Inverse by cofactors. Returns `None` when the determinant is exactly zero.
    pub fn inverse(&self) -> Option<Matrix2> {
        let d = self.det();
        if d == Complex64::new(0.0, 0.0) {
            return None;
        }
        let m = &self.0;
        Some(Matrix2([
            [m[1][1] / d, -m[0][1] / d],
            [-m[1][0] / d, m[0][0] / d],
        ]))
    }

    /// 2-norm condition number σ_max / σ_min, from the closed-form singular
    /// values of a 2×2 matrix.
    pub fn condition_number(&self) -> f64 {
        let fro2: f64 = self.0.iter().flatten().map(|v| v.norm_sqr()).sum();
        let det = self.det().norm();
        // σ₁² + σ₂² = ‖M‖_F², σ₁σ₂ = |det M|
        let disc = (fro2 * fro2 - 4.0 * det * det).max(0.0).sqrt();
        let s_max2 = 0.5 * (fro2 + disc);
        let s_min2 = det * det / s_max2;
        if s_min2 <= 0.0 || !s_min2.is_finite() {
            return f64::INFINITY;
        }
        (s_max2 / s_min2).sqrt()
    }

    pub fn max_abs_diff(&self, other: &Matrix2) -> f64 {
        self.0
            .iter()
            .flatten()
            .zip(other.0.iter().flatten())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl TryFrom<&CMatrix> for Matrix2 {
    type Error = Error;

    fn try_from(m: &CMatrix) -> Result<Self> {
        if m.rows() != 2 || m.cols() != 2 {
            return Err(Error::Dimension {
                context: "2x2 stream channel",
                expected: 4,
                actual: m.rows() * m.cols(),
            });
        }
        Ok(Matrix2([[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn inverse_round_trip() {
        let m = Matrix2([[c(1.0, 2.0), c(0.5, -1.0)], [c(-0.3, 0.1), c(2.0, 0.0)]]);
        let p = m.mul(&m.inverse().unwrap());
        assert!(p.max_abs_diff(&Matrix2::identity()) < 1e-14);
    }

    #[test]
    fn condition_of_scaled_identity_is_one() {
        let m = Matrix2([[c(2.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(0.0, 2.0)]]);
        assert!((m.condition_number() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn condition_of_diagonal() {
        let m = Matrix2([[c(10.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(0.1, 0.0)]]);
        assert!((m.condition_number() - 100.0).abs() < 1e-9);
        let singular = Matrix2([[c(1.0, 0.0), c(2.0, 0.0)], [c(2.0, 0.0), c(4.0, 0.0)]]);
        assert!(singular.condition_number().is_infinite());
    }

    #[test]
    fn matvec_dimension_check() {
        let m = CMatrix::identity(3);
        assert!(m.matvec(&[c(1.0, 0.0)]).is_err());
    }
}
