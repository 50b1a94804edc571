//! Pivoted QR, LU and SVD subset selection.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{check_k, finish, Selection, Strategy};
use crate::diagnostics::condition_number;
use crate::error::{QuadError, Result};
use crate::linalg::{jacobi_svd, lu_row_pivots, pivoted_qr, solve_upper};
use crate::orthopoly::DesignMatrix;

/// Pivots smaller than this fraction of the largest row norm mean rank loss.
pub const RANK_RTOL: f64 = 1e-13;

fn max_row_norm(a: &DMatrix<f64>) -> f64 {
    a.row_iter().map(|r| r.norm()).fold(0.0, f64::max)
}

fn qr_pass(a: &DMatrix<f64>, rows: &[usize], steps: usize) -> (Vec<usize>, Vec<f64>) {
    let at = a.select_rows(rows).transpose();
    let qr = pivoted_qr(&at, steps);
    (qr.perm[..qr.steps()].iter().map(|&j| rows[j]).collect(), qr.pivot_norms)
}

fn lu_pass(a: &DMatrix<f64>, rows: &[usize], steps: usize) -> (Vec<usize>, Vec<f64>) {
    let sub = a.select_rows(rows);
    let piv = lu_row_pivots(&sub, steps);
    piv.into_iter().map(|(r, v)| (rows[r], v)).unzip()
}

/// Runs `pass` once on all rows, checks rank, then repeats it on the rows
/// not yet chosen until `k` rows are selected.
fn repeated_selection(
    a: &DMatrix<f64>,
    k: usize,
    pass: impl Fn(&DMatrix<f64>, &[usize], usize) -> (Vec<usize>, Vec<f64>),
) -> Result<(Vec<usize>, usize, f64)> {
    let (m, n) = a.shape();
    let scale = max_row_norm(a);
    let all: Vec<usize> = (0..m).collect();
    let (first, norms) = pass(a, &all, n);
    let need = k.min(n);
    for (j, &v) in norms.iter().take(need).enumerate() {
        if !(v > RANK_RTOL * scale) {
            return Err(QuadError::RankDeficient { index: j, norm: v });
        }
    }
    let min_pivot = norms.iter().take(need).cloned().fold(f64::INFINITY, f64::min);
    let mut chosen: Vec<usize> = first.into_iter().take(k).collect();
    let mut passes = 1;
    while chosen.len() < k {
        let mut taken = vec![false; m];
        chosen.iter().for_each(|&r| taken[r] = true);
        let rest: Vec<usize> = (0..m).filter(|&r| !taken[r]).collect();
        let (more, _) = pass(a, &rest, n.min(k - chosen.len()));
        chosen.extend(more);
        passes += 1;
    }
    Ok((chosen, passes, min_pivot))
}

/// Householder QR with column pivoting on `A^T`; pivot columns are rows of `A`.
pub fn qr_subselect(a: &DesignMatrix, k: usize) -> Result<Selection> {
    check_k(a, k)?;
    let (rows, passes, min_pivot) = repeated_selection(a.entries(), k, qr_pass)?;
    let extra = BTreeMap::from([("min_pivot".to_string(), min_pivot)]);
    Ok(finish(a, rows, Strategy::Qr, passes, None, vec![], extra))
}

/// Gaussian elimination with partial row pivoting on `A`.
pub fn lu_subselect(a: &DesignMatrix, k: usize) -> Result<Selection> {
    check_k(a, k)?;
    let (rows, passes, min_pivot) = repeated_selection(a.entries(), k, lu_pass)?;
    let extra = BTreeMap::from([("min_pivot".to_string(), min_pivot)]);
    Ok(finish(a, rows, Strategy::Lu, passes, None, vec![], extra))
}

/// SVD of `A`, then pivoted QR on the transposed left singular vectors.
pub fn svd_subselect(a: &DesignMatrix, k: usize) -> Result<Selection> {
    check_k(a, k)?;
    if k != a.n() {
        return Err(QuadError::invalid(format!(
            "svd subset selection needs k = n = {}, got {k}",
            a.n()
        )));
    }
    let svd = jacobi_svd(a.entries())?;
    let s = &svd.singular_values;
    let smin = s[s.len() - 1];
    if !(smin > RANK_RTOL * s[0]) {
        return Err(QuadError::RankDeficient {
            index: s.len() - 1,
            norm: smin,
        });
    }
    let qr = pivoted_qr(&svd.u.transpose(), k);
    let rows = qr.perm[..k].to_vec();
    let extra = BTreeMap::from([("sigma_min".to_string(), smin), ("sigma_max".to_string(), s[0])]);
    Ok(finish(a, rows, Strategy::Svd, 1, None, vec![], extra))
}

/// Measured pivoting constant and the resulting condition bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionBound {
    /// `max |R1^{-1} R2|` from the pivoted factorization of `A^T`.
    pub s: f64,
    pub kappa_full: f64,
    pub kappa_selected: f64,
    /// `kappa_full * sqrt(1 + s^2 n (m - n))`
    pub bound: f64,
    pub rows: Vec<usize>,
}

impl ConditionBound {
    pub fn holds(&self) -> bool {
        self.kappa_selected <= self.bound
    }
}

/// Pivoted QR of `A^T`, `s = max |R1^{-1} R2|` and the condition bound of
/// the `n` selected rows.
pub fn pivoting_constant(a: &DesignMatrix) -> Result<ConditionBound> {
    let (m, n) = (a.m(), a.n());
    if m < n {
        return Err(QuadError::invalid("need m >= n"));
    }
    let at = a.entries().transpose();
    let qr = pivoted_qr(&at, n);
    let scale = max_row_norm(a.entries());
    for (j, &v) in qr.pivot_norms.iter().enumerate() {
        if !(v > RANK_RTOL * scale) {
            return Err(QuadError::RankDeficient { index: j, norm: v });
        }
    }
    let s = if m > n {
        let r2 = qr.r.columns(n, m - n).into_owned();
        let t = solve_upper(&qr.r, &r2);
        t.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
    } else {
        0.0
    };
    let rows: Vec<usize> = qr.perm[..n].to_vec();
    let kappa_full = condition_number(a.entries());
    let kappa_selected = condition_number(&a.entries().select_rows(&rows));
    let bound = kappa_full * (1.0 + s * s * (n * (m - n)) as f64).sqrt();
    let mut rows = rows;
    rows.sort_unstable();
    Ok(ConditionBound {
        s,
        kappa_full,
        kappa_selected,
        bound,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orthopoly::{design_matrix, recurrence_coefficients, Family, MultiIndexSet};
    use crate::quadrature::golub_welsch;

    fn gauss_candidates(m: usize, deg: usize) -> DesignMatrix {
        let t = recurrence_coefficients(Family::Legendre, m.max(deg + 1)).unwrap();
        let r = golub_welsch(&t, m).unwrap();
        design_matrix(&MultiIndexSet::univariate(deg), &[t], &r.points, &r.weights).unwrap()
    }

    #[test]
    fn rejects_bad_k() {
        let a = gauss_candidates(10, 3);
        assert!(qr_subselect(&a, 3).is_err());
        assert!(lu_subselect(&a, 11).is_err());
        assert!(svd_subselect(&a, 5).is_err());
    }

    #[test]
    fn rank_deficiency_is_reported() {
        let t = recurrence_coefficients(Family::Legendre, 3).unwrap();
        let basis = MultiIndexSet::univariate(2);
        // only two distinct nodes cannot support three basis functions
        let pts = vec![vec![0.5], vec![0.5], vec![-0.5], vec![-0.5]];
        let a = design_matrix(&basis, &[t], &pts, &[0.25; 4]).unwrap();
        assert!(matches!(qr_subselect(&a, 3), Err(QuadError::RankDeficient { .. })));
        assert!(matches!(lu_subselect(&a, 3), Err(QuadError::RankDeficient { .. })));
        assert!(matches!(svd_subselect(&a, 3), Err(QuadError::RankDeficient { .. })));
    }

    #[test]
    fn k_above_n_takes_further_passes() {
        let a = gauss_candidates(40, 3);
        for sel in [qr_subselect(&a, 10).unwrap(), lu_subselect(&a, 10).unwrap()] {
            assert_eq!(sel.k(), 10);
            assert_eq!(sel.objective_report.iterations, 3);
        }
    }

    #[test]
    fn bound_holds_on_gauss_grid() {
        let a = gauss_candidates(101, 5);
        let b = pivoting_constant(&a).unwrap();
        assert!(b.s.is_finite() && b.s > 0.0);
        assert!(b.holds());
    }
}
