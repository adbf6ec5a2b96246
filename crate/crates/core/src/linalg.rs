//! Dense square-matrix helpers for the small dimensions (d ≤ 5) this crate
//! works in: Cholesky factorization, SPD inversion, log-determinant, and
//! symmetric eigenvalues via cyclic Jacobi rotations.

use alloc::vec;
use alloc::vec::Vec;
// Resolves f64 math under no_std; std's inherent methods shadow it when
// std is anywhere in the crate graph, so the import can look unused.
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// A row-major square matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    dim: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(dim: usize) -> Self {
        Matrix { dim, data: vec![0.0; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Matrix::zeros(dim);
        for i in 0..dim {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Builds a matrix from row-major data; `data.len()` must be `dim * dim`.
    pub fn from_rows(dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, got: data.len() });
        }
        Ok(Matrix { dim, data })
    }

    /// Builds a matrix from nested rows, validating that they are square.
    pub fn from_nested(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: row.len() });
            }
            data.extend_from_slice(row);
        }
        Ok(Matrix { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim).map(|i| self.data[i * self.dim..(i + 1) * self.dim].to_vec()).collect()
    }

    pub fn scaled(&self, c: f64) -> Matrix {
        Matrix { dim: self.dim, data: self.data.iter().map(|v| v * c).collect() }
    }

    /// `self * v`, with `out.len() == dim`.
    pub fn mul_vec(&self, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.dim);
        debug_assert_eq!(out.len(), self.dim);
        for i in 0..self.dim {
            let row = &self.data[i * self.dim..(i + 1) * self.dim];
            out[i] = row.iter().zip(v).map(|(a, b)| a * b).sum();
        }
    }

    /// `self * other`.
    pub fn mul(&self, other: &Matrix) -> Matrix {
        debug_assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.at(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.at(k, j);
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> Matrix {
        let n = self.dim;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.set(j, i, self.at(i, j));
            }
        }
        out
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                if (self.at(i, j) - self.at(j, i)).abs() > tol {
                    return false;
                }
            }
        }
        true
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Lower-triangular Cholesky factor `L` with `L * Lᵀ = self`.
    ///
    /// Fails with [`Error::NotPositiveDefinite`] when a pivot is not strictly
    /// positive, which also catches non-finite entries.
    pub fn cholesky(&self) -> Result<Matrix> {
        let n = self.dim;
        let mut l = Matrix::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                let mut sum = self.at(i, j);
                for k in 0..j {
                    sum -= l.at(i, k) * l.at(j, k);
                }
                if i == j {
                    if !(sum > 0.0) || !sum.is_finite() {
                        return Err(Error::NotPositiveDefinite);
                    }
                    l.set(i, j, sum.sqrt());
                } else {
                    l.set(i, j, sum / l.at(j, j));
                }
            }
        }
        Ok(l)
    }

    /// Log-determinant of the SPD matrix with Cholesky factor `chol`.
    pub fn log_det_from_cholesky(chol: &Matrix) -> f64 {
        (0..chol.dim).map(|i| chol.at(i, i).ln()).sum::<f64>() * 2.0
    }

    /// Inverse of the SPD matrix with Cholesky factor `chol`, by solving
    /// `L y = e_i` then `Lᵀ x = y` for each basis vector.
    pub fn inverse_from_cholesky(chol: &Matrix) -> Matrix {
        let n = chol.dim;
        let mut inv = Matrix::zeros(n);
        let mut col = vec![0.0; n];
        for c in 0..n {
            col.iter_mut().for_each(|v| *v = 0.0);
            col[c] = 1.0;
            // forward substitution: L y = e_c
            for i in 0..n {
                let mut s = col[i];
                for k in 0..i {
                    s -= chol.at(i, k) * col[k];
                }
                col[i] = s / chol.at(i, i);
            }
            // backward substitution: Lᵀ x = y
            for i in (0..n).rev() {
                let mut s = col[i];
                for k in (i + 1)..n {
                    s -= chol.at(k, i) * col[k];
                }
                col[i] = s / chol.at(i, i);
            }
            for i in 0..n {
                inv.set(i, c, col[i]);
            }
        }
        // Symmetrize to wash out substitution round-off.
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (inv.at(i, j) + inv.at(j, i));
                inv.set(i, j, v);
                inv.set(j, i, v);
            }
        }
        inv
    }

    /// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations,
    /// returned in ascending order.
    pub fn sym_eigenvalues(&self) -> Vec<f64> {
        let n = self.dim;
        let mut a = self.clone();
        for _sweep in 0..64 {
            let mut off = 0.0;
            for i in 0..n {
                for j in (i + 1)..n {
                    off += a.at(i, j) * a.at(i, j);
                }
            }
            if off.sqrt() < 1e-14 {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a.at(p, q);
                    if apq.abs() < 1e-300 {
                        continue;
                    }
                    let theta = (a.at(q, q) - a.at(p, p)) / (2.0 * apq);
                    let t = if theta >= 0.0 {
                        1.0 / (theta + (1.0 + theta * theta).sqrt())
                    } else {
                        -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                    };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a.at(k, p);
                        let akq = a.at(k, q);
                        a.set(k, p, c * akp - s * akq);
                        a.set(k, q, s * akp + c * akq);
                    }
                    for k in 0..n {
                        let apk = a.at(p, k);
                        let aqk = a.at(q, k);
                        a.set(p, k, c * apk - s * aqk);
                        a.set(q, k, s * apk + c * aqk);
                    }
                }
            }
        }
        let mut eig: Vec<f64> = (0..n).map(|i| a.at(i, i)).collect();
        eig.sort_unstable_by(f64::total_cmp);
        eig
    }

    /// 2-norm condition number of a symmetric positive definite matrix.
    /// Returns `+inf` when the smallest eigenvalue is not strictly positive.
    pub fn spd_condition_number(&self) -> f64 {
        let eig = self.sym_eigenvalues();
        let min = eig[0];
        let max = eig[eig.len() - 1];
        if min <= 0.0 {
            f64::INFINITY
        } else {
            max / min
        }
    }
}

/// Quadratic form `vᵀ M v` for symmetric `M`.
pub fn quadratic_form(m: &Matrix, v: &[f64]) -> f64 {
    let n = m.dim();
    debug_assert_eq!(v.len(), n);
    let mut acc = 0.0;
    for i in 0..n {
        let mut row = 0.0;
        for j in 0..n {
            row += m.at(i, j) * v[j];
        }
        acc += v[i] * row;
    }
    acc
}
