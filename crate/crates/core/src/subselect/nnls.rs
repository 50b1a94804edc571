//! Lawson-Hanson active-set nonnegative least squares and moment-matched
//! quadrature weights.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{QuadError, Result};
use crate::linalg::householder_lstsq;
use crate::orthopoly::{basis_matrix, MultiIndexSet, RecurrenceTable};

/// Residuals above this mark the recovered rule as inexact.
pub const NNLS_EXACT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NnlsResult {
    pub weights: Vec<f64>,
    pub residual_norm: f64,
    /// `false` when the residual exceeds [`NNLS_EXACT_TOL`].
    pub exact: bool,
    pub iterations: usize,
}

/// `min ||P w - e||` subject to `w >= 0`.
pub fn nnls(p: &DMatrix<f64>, e: &[f64]) -> Result<NnlsResult> {
    let (rows, cols) = p.shape();
    if e.len() != rows {
        return Err(QuadError::DimensionMismatch {
            expected: rows,
            got: e.len(),
        });
    }
    let b = DVector::from_column_slice(e);
    let tol = 10.0 * f64::EPSILON * p.abs().max() * rows.max(cols) as f64;
    let mut x = DVector::<f64>::zeros(cols);
    let mut passive = vec![false; cols];
    let max_outer = 3 * cols.max(1);
    let mut iterations = 0;

    let solve_passive = |passive: &[bool]| -> Option<(Vec<usize>, DVector<f64>)> {
        let idx: Vec<usize> = (0..cols).filter(|&j| passive[j]).collect();
        let sub = p.select_columns(&idx);
        householder_lstsq(&sub, e).ok().map(|(z, _)| (idx, z))
    };

    for _ in 0..max_outer {
        let grad = p.transpose() * (&b - p * &x);
        let cand = (0..cols)
            .filter(|&j| !passive[j] && grad[j] > tol)
            .max_by(|&i, &j| grad[i].total_cmp(&grad[j]).then(j.cmp(&i)));
        let Some(j) = cand else { break };
        passive[j] = true;
        iterations += 1;

        loop {
            let Some((idx, z)) = solve_passive(&passive) else {
                // dependent column: undo and stop growing the set
                passive[j] = false;
                return Ok(finish(p, &b, x, iterations));
            };
            if z.iter().all(|v| *v > tol) {
                for (k, &c) in idx.iter().enumerate() {
                    x[c] = z[k];
                }
                break;
            }
            let mut alpha = f64::INFINITY;
            for (k, &c) in idx.iter().enumerate() {
                if z[k] <= tol {
                    let step = x[c] / (x[c] - z[k]);
                    alpha = alpha.min(step);
                }
            }
            for (k, &c) in idx.iter().enumerate() {
                x[c] += alpha * (z[k] - x[c]);
                if x[c] <= tol {
                    x[c] = 0.0;
                    passive[c] = false;
                }
            }
            if !passive.iter().any(|&v| v) {
                break;
            }
        }
    }
    Ok(finish(p, &b, x, iterations))
}

fn finish(p: &DMatrix<f64>, b: &DVector<f64>, x: DVector<f64>, iterations: usize) -> NnlsResult {
    let residual_norm = (p * &x - b).norm();
    NnlsResult {
        weights: x.iter().cloned().collect(),
        residual_norm,
        exact: residual_norm <= NNLS_EXACT_TOL,
        iterations,
    }
}

/// Nonnegative weights with `P w ~= e`, `P(i, j) = psi_i(z_j)`.
pub fn nnls_weights(
    points: &[Vec<f64>],
    basis: &MultiIndexSet,
    recurrences: &[RecurrenceTable],
    e: &[f64],
) -> Result<NnlsResult> {
    if e.len() != basis.len() {
        return Err(QuadError::DimensionMismatch {
            expected: basis.len(),
            got: e.len(),
        });
    }
    let p = basis_matrix(basis, recurrences, points)?.transpose();
    nnls(&p, e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orthopoly::{recurrence_coefficients, Family};
    use crate::quadrature::golub_welsch;
    use proptest::prelude::*;

    #[test]
    fn recovers_gauss_weights() {
        let t = recurrence_coefficients(Family::Legendre, 3).unwrap();
        let g = golub_welsch(&t, 3).unwrap();
        let r = nnls_weights(&g.points, &MultiIndexSet::univariate(2), &[t], &[1.0, 0.0, 0.0]).unwrap();
        for (w, e) in r.weights.iter().zip([5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0]) {
            assert!((w - e).abs() < 1e-10);
        }
        assert!(r.exact && r.residual_norm < 1e-12);
    }

    #[test]
    fn single_point() {
        let t = recurrence_coefficients(Family::Legendre, 1).unwrap();
        let r = nnls_weights(&[vec![0.0]], &MultiIndexSet::univariate(0), &[t], &[1.0]).unwrap();
        assert_eq!(r.weights, vec![1.0]);
    }

    #[test]
    fn infeasible_moments_are_flagged() {
        // two nodes at the same side cannot match a zero first moment
        let t = recurrence_coefficients(Family::Legendre, 2).unwrap();
        let r = nnls_weights(&[vec![0.2], vec![0.7]], &MultiIndexSet::univariate(1), &[t], &[1.0, 0.0]).unwrap();
        assert!(!r.exact);
        assert!(r.weights.iter().all(|w| *w >= 0.0));
    }

    proptest! {
        #[test]
        fn kkt_conditions(vals in proptest::collection::vec(-1.0f64..1.0, 24), rhs in proptest::collection::vec(-1.0f64..1.0, 4)) {
            let p = DMatrix::from_row_slice(4, 6, &vals);
            let r = nnls(&p, &rhs).unwrap();
            let x = DVector::from_vec(r.weights.clone());
            let grad = p.transpose() * (DVector::from_vec(rhs) - &p * &x);
            for j in 0..6 {
                prop_assert!(x[j] >= 0.0);
                // no ascent direction remains among the zero variables
                prop_assert!(grad[j] <= 1e-9);
                if x[j] > 0.0 {
                    prop_assert!(grad[j].abs() <= 1e-9);
                }
            }
        }
    }
}
