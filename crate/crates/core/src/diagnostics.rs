//! Least squares, Gram matrices, condition numbers and moments.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{QuadError, Result};
use crate::linalg::{householder_lstsq, jacobi_svd};
use crate::orthopoly::{DesignMatrix, MultiIndexSet};

pub const DEFAULT_GRAM_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeastSquares {
    pub x: Vec<f64>,
    pub residual_norm: f64,
}

/// Minimizer of `||A x - b||` via Householder QR.
pub fn solve_least_squares(a: &DesignMatrix, b: &[f64]) -> Result<LeastSquares> {
    let (x, residual_norm) = householder_lstsq(a.entries(), b)?;
    Ok(LeastSquares {
        x: x.iter().cloned().collect(),
        residual_norm,
    })
}

/// Right-hand side `b_i = sqrt(w_i) f(z_i)` for a design matrix.
pub fn weighted_rhs(a: &DesignMatrix, f_values: &[f64]) -> Result<Vec<f64>> {
    if f_values.len() != a.m() {
        return Err(QuadError::DimensionMismatch {
            expected: a.m(),
            got: f_values.len(),
        });
    }
    Ok(f_values.iter().zip(a.weights()).map(|(f, w)| f * w.sqrt()).collect())
}

/// `G = A^T A` with its entrywise comparison against the identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GramReport {
    pub gram: Vec<Vec<f64>>,
    /// Largest `|G_pq - delta_pq|` over all entries, diagonal included.
    pub max_offdiag_error: f64,
    /// `exactness_frontier[p][q]` is true when `|G_pq - delta_pq| < tol`.
    pub exactness_frontier: Vec<Vec<bool>>,
    pub tol: f64,
}

impl GramReport {
    pub fn n(&self) -> usize {
        self.gram.len()
    }

    /// `(p, q)` pairs outside tolerance, row-major.
    pub fn failures(&self) -> Vec<(usize, usize)> {
        let mut out = vec![];
        for (p, row) in self.exactness_frontier.iter().enumerate() {
            for (q, ok) in row.iter().enumerate() {
                if !ok {
                    out.push((p, q));
                }
            }
        }
        out
    }

    pub fn passes(&self) -> bool {
        self.exactness_frontier.iter().flatten().all(|ok| *ok)
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        let n = self.n();
        DMatrix::from_fn(n, n, |i, j| self.gram[i][j])
    }
}

pub fn gram_report(a: &DesignMatrix, tol: f64) -> GramReport {
    gram_report_of(a.entries(), tol)
}

/// Gram report of an arbitrary matrix (for instance a row subset of `A`).
pub fn gram_report_of(a: &DMatrix<f64>, tol: f64) -> GramReport {
    let g = a.transpose() * a;
    let n = g.nrows();
    // symmetrize so round-off never breaks the symmetric invariant
    let gram: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if j >= i { g[(i, j)] } else { g[(j, i)] }).collect())
        .collect();
    let mut max_err: f64 = 0.0;
    let exactness_frontier = gram
        .iter()
        .enumerate()
        .map(|(p, row)| {
            row.iter()
                .enumerate()
                .map(|(q, v)| {
                    let e = (v - if p == q { 1.0 } else { 0.0 }).abs();
                    max_err = max_err.max(e);
                    e < tol
                })
                .collect()
        })
        .collect();
    GramReport {
        gram,
        max_offdiag_error: max_err,
        exactness_frontier,
        tol,
    }
}

/// 2-norm condition number `sigma_max / sigma_min` (infinite when singular).
pub fn condition_number(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return f64::NAN;
    }
    match jacobi_svd(a) {
        Ok(svd) => {
            let s = &svd.singular_values;
            let (hi, lo) = (s[0], s[s.len() - 1]);
            if lo == 0.0 {
                f64::INFINITY
            } else {
                hi / lo
            }
        }
        Err(_) => f64::NAN,
    }
}

/// Mean and variance from orthonormal coefficients (Parseval).
pub fn moments(x: &[f64], basis: &MultiIndexSet) -> Result<(f64, f64)> {
    if x.len() != basis.len() {
        return Err(QuadError::DimensionMismatch {
            expected: basis.len(),
            got: x.len(),
        });
    }
    let zero = basis
        .indices
        .iter()
        .position(|p| p.iter().all(|v| *v == 0))
        .ok_or(QuadError::MissingZeroIndex)?;
    let var = x
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != zero)
        .map(|(_, v)| v * v)
        .sum();
    Ok((x[zero], var))
}
