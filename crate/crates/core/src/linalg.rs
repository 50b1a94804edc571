//! Dense kernels used by the quadrature and subset-selection code.
//!
//! Everything here works on `nalgebra::DMatrix<f64>` storage but the
//! factorizations themselves are written out so that pivot order and tie
//! handling are fully determined by this crate.

use nalgebra::{DMatrix, DVector};

use crate::error::{QuadError, Result};

/// Relative tolerance under which two pivot candidates count as tied.
pub const PIVOT_TIE_RTOL: f64 = 1e-12;

/// Iteration cap per eigenvalue for the implicit QL sweep.
pub const QL_MAX_ITER: usize = 200;

/// Eigenvalues of a symmetric tridiagonal matrix together with the first
/// component of each normalized eigenvector, scaled by `first`.
///
/// `diag` has length `n`, `offdiag` length `n - 1` (entry `i` couples rows
/// `i` and `i + 1`). Output is sorted by ascending eigenvalue.
///
/// This is the implicit QL iteration with Wilkinson shifts in the form used
/// by Golub-Welsch codes: only the first row of the eigenvector matrix is
/// rotated, so the cost is O(n^2).
pub fn tridiagonal_first_components(
    diag: &[f64],
    offdiag: &[f64],
    first: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = diag.len();
    if n == 0 {
        return Ok((vec![], vec![]));
    }
    if offdiag.len() + 1 != n {
        return Err(QuadError::DimensionMismatch {
            expected: n - 1,
            got: offdiag.len(),
        });
    }
    let mut d = diag.to_vec();
    let mut e = offdiag.to_vec();
    e.push(0.0);
    let mut z = vec![0.0; n];
    z[0] = first;

    for l in 0..n {
        let mut iter = 0;
        loop {
            // look for a small subdiagonal element
            let mut m = l;
            while m + 1 < n {
                if e[m].abs() <= f64::EPSILON * (d[m].abs() + d[m + 1].abs()) {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            if iter == QL_MAX_ITER {
                return Err(QuadError::NoConvergence {
                    index: l,
                    iterations: QL_MAX_ITER,
                });
            }
            iter += 1;

            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                if g.abs() <= f.abs() {
                    c = g / f;
                    r = c.hypot(1.0);
                    e[i + 1] = f * r;
                    s = 1.0 / r;
                    c *= s;
                } else {
                    s = f / g;
                    r = s.hypot(1.0);
                    e[i + 1] = g * r;
                    c = 1.0 / r;
                    s *= c;
                }
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                let f = z[i + 1];
                z[i + 1] = s * z[i] + c * f;
                z[i] = c * z[i] - s * f;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    Ok((
        order.iter().map(|&i| d[i]).collect(),
        order.iter().map(|&i| z[i]).collect(),
    ))
}

/// Householder QR with column pivoting, truncated after `max_steps` columns.
#[derive(Debug, Clone)]
pub struct PivotedQr {
    /// Upper trapezoidal factor in pivoted column order (`steps x n`).
    pub r: DMatrix<f64>,
    /// `perm[j]` is the original column placed at position `j`.
    pub perm: Vec<usize>,
    /// Residual column norm of each accepted pivot, i.e. `|r[j, j]|`.
    pub pivot_norms: Vec<f64>,
}

impl PivotedQr {
    pub fn steps(&self) -> usize {
        self.pivot_norms.len()
    }
}

/// Column-pivoted Householder QR. At each step the trailing column with the
/// largest residual norm is moved forward; norms within [`PIVOT_TIE_RTOL`]
/// of the maximum are ties and go to the lowest original column index.
pub fn pivoted_qr(a: &DMatrix<f64>, max_steps: usize) -> PivotedQr {
    let (m, n) = a.shape();
    let steps = max_steps.min(m).min(n);
    let mut w = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut pivot_norms = Vec::with_capacity(steps);

    for j in 0..steps {
        // norms are recomputed rather than downdated
        let norms: Vec<f64> = (j..n).map(|c| w.view((j, c), (m - j, 1)).norm()).collect();
        let best = pick_pivot(&norms, |k| perm[j + k]);
        let c = j + best;
        if c != j {
            w.swap_columns(j, c);
            perm.swap(j, c);
        }
        let norm = norms[best];
        pivot_norms.push(norm);
        if norm == 0.0 {
            continue;
        }

        let x0 = w[(j, j)];
        let alpha = if x0 >= 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (j..m).map(|i| w[(i, j)]).collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|t| t * t).sum();
        if vnorm2 > 0.0 {
            for col in j + 1..n {
                let dot: f64 = v.iter().enumerate().map(|(k, vk)| vk * w[(j + k, col)]).sum();
                let f = 2.0 * dot / vnorm2;
                for (k, vk) in v.iter().enumerate() {
                    w[(j + k, col)] -= f * vk;
                }
            }
        }
        w[(j, j)] = alpha;
        for i in j + 1..m {
            w[(i, j)] = 0.0;
        }
    }

    let r = DMatrix::from_fn(steps, n, |i, c| if c >= i { w[(i, c)] } else { 0.0 });
    PivotedQr {
        r,
        perm,
        pivot_norms,
    }
}

/// Index of the largest value; values within the tie tolerance of the
/// maximum are resolved by the smallest `key`.
pub(crate) fn pick_pivot(values: &[f64], key: impl Fn(usize) -> usize) -> usize {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let cutoff = max - PIVOT_TIE_RTOL * max.abs();
    let mut best: Option<usize> = None;
    for (i, &v) in values.iter().enumerate() {
        if v >= cutoff && best.is_none_or(|b| key(i) < key(b)) {
            best = Some(i);
        }
    }
    best.unwrap_or(0)
}

/// Gaussian elimination with partial (row) pivoting on `a`, run for at most
/// `max_steps` columns. Returns `(row, |pivot|)` in pivot order; rows refer
/// to the original indexing.
pub fn lu_row_pivots(a: &DMatrix<f64>, max_steps: usize) -> Vec<(usize, f64)> {
    let (m, n) = a.shape();
    let steps = max_steps.min(m).min(n);
    let mut w = a.clone();
    let mut active: Vec<usize> = (0..m).collect();
    let mut pivots = Vec::with_capacity(steps);

    for j in 0..steps {
        let mags: Vec<f64> = active.iter().map(|&r| w[(r, j)].abs()).collect();
        let k = pick_pivot(&mags, |i| active[i]);
        let row = active.remove(k);
        let piv = w[(row, j)];
        pivots.push((row, piv.abs()));
        if piv == 0.0 {
            continue;
        }
        for &r in &active {
            let f = w[(r, j)] / piv;
            if f != 0.0 {
                for c in j..n {
                    w[(r, c)] -= f * w[(row, c)];
                }
            }
        }
    }
    pivots
}

/// Thin singular value decomposition `a = u * diag(s) * v^T` with singular
/// values in descending order.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: DMatrix<f64>,
    pub singular_values: Vec<f64>,
    pub v: DMatrix<f64>,
}

pub const JACOBI_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 80;

/// One-sided (Hestenes) Jacobi SVD.
pub fn jacobi_svd(a: &DMatrix<f64>) -> Result<Svd> {
    let (m, n) = a.shape();
    if m < n {
        let t = jacobi_svd(&a.transpose())?;
        return Ok(Svd {
            u: t.v,
            singular_values: t.singular_values,
            v: t.u,
        });
    }
    let mut u = a.clone();
    let mut v = DMatrix::<f64>::identity(n, n);

    let mut converged = n < 2;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off: f64 = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                let (alpha, beta, gamma) = {
                    let cp = u.column(p);
                    let cq = u.column(q);
                    (cp.norm_squared(), cq.norm_squared(), cp.dot(&cq))
                };
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                let rel = gamma.abs() / (alpha * beta).sqrt();
                off = off.max(rel);
                if rel <= JACOBI_TOL {
                    continue;
                }
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + zeta.hypot(1.0));
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / t.hypot(1.0);
                let s = c * t;
                rotate_columns(&mut u, p, q, c, s);
                rotate_columns(&mut v, p, q, c, s);
            }
        }
        if off <= JACOBI_TOL {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(QuadError::NoConvergence {
            index: 0,
            iterations: JACOBI_MAX_SWEEPS,
        });
    }

    let sv: Vec<f64> = (0..n).map(|j| u.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]));
    let mut uu = DMatrix::zeros(m, n);
    let mut vv = DMatrix::zeros(n, n);
    for (k, &j) in order.iter().enumerate() {
        if sv[j] > 0.0 {
            uu.set_column(k, &(u.column(j) / sv[j]));
        }
        vv.set_column(k, &v.column(j));
    }
    Ok(Svd {
        u: uu,
        singular_values: order.iter().map(|&j| sv[j]).collect(),
        v: vv,
    })
}

fn rotate_columns(x: &mut DMatrix<f64>, p: usize, q: usize, c: f64, s: f64) {
    for i in 0..x.nrows() {
        let xp = x[(i, p)];
        let xq = x[(i, q)];
        x[(i, p)] = c * xp - s * xq;
        x[(i, q)] = s * xp + c * xq;
    }
}

/// Least-squares solution of `a x = b` through an unpivoted Householder QR.
/// Returns the minimizer and the residual norm `||a x - b||`.
pub fn householder_lstsq(a: &DMatrix<f64>, b: &[f64]) -> Result<(DVector<f64>, f64)> {
    let (m, n) = a.shape();
    if b.len() != m {
        return Err(QuadError::DimensionMismatch {
            expected: m,
            got: b.len(),
        });
    }
    if m < n {
        return Err(QuadError::RankDeficient {
            index: m,
            norm: 0.0,
        });
    }
    let mut w = a.clone();
    let mut y = DVector::from_column_slice(b);
    let mut diag = vec![0.0; n];

    for j in 0..n {
        let norm = w.view((j, j), (m - j, 1)).norm();
        let x0 = w[(j, j)];
        let alpha = if x0 >= 0.0 { -norm } else { norm };
        diag[j] = alpha;
        if norm == 0.0 {
            continue;
        }
        let mut v: Vec<f64> = (j..m).map(|i| w[(i, j)]).collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|t| t * t).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        for col in j + 1..n {
            let dot: f64 = v.iter().enumerate().map(|(k, vk)| vk * w[(j + k, col)]).sum();
            let f = 2.0 * dot / vnorm2;
            for (k, vk) in v.iter().enumerate() {
                w[(j + k, col)] -= f * vk;
            }
        }
        let dot: f64 = v.iter().enumerate().map(|(k, vk)| vk * y[j + k]).sum();
        let f = 2.0 * dot / vnorm2;
        for (k, vk) in v.iter().enumerate() {
            y[j + k] -= f * vk;
        }
    }

    let scale = diag.iter().fold(0.0f64, |acc, d| acc.max(d.abs()));
    for (j, d) in diag.iter().enumerate() {
        if d.abs() <= 1e-13 * scale || scale == 0.0 {
            return Err(QuadError::RankDeficient {
                index: j,
                norm: d.abs(),
            });
        }
    }

    let mut x = DVector::zeros(n);
    for j in (0..n).rev() {
        let mut acc = y[j];
        for c in j + 1..n {
            acc -= w[(j, c)] * x[c];
        }
        x[j] = acc / diag[j];
    }
    let residual = y.rows(n, m - n).norm();
    Ok((x, residual))
}

/// Solve `r1 * x = rhs` for upper-triangular `r1` (square, leading block of `r`).
pub(crate) fn solve_upper(r: &DMatrix<f64>, rhs: &DMatrix<f64>) -> DMatrix<f64> {
    let n = rhs.nrows();
    let mut x = rhs.clone();
    for col in 0..rhs.ncols() {
        for j in (0..n).rev() {
            let mut acc = x[(j, col)];
            for c in j + 1..n {
                acc -= r[(j, c)] * x[(c, col)];
            }
            x[(j, col)] = acc / r[(j, j)];
        }
    }
    x
}

/// log det of a symmetric positive definite matrix, `None` if the Cholesky
/// factorization fails.
pub fn spd_log_det(m: &DMatrix<f64>) -> Option<f64> {
    let chol = m.clone().cholesky()?;
    Some(2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn test_matrix(m: usize, n: usize, seed: u64) -> DMatrix<f64> {
        // small LCG, enough for fixtures
        let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        DMatrix::from_fn(m, n, |_, _| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        })
    }

    #[test]
    fn tridiagonal_matches_nalgebra_eigen() {
        let diag = [0.3, -0.1, 0.7, 0.2, 0.0];
        let off = [0.5, 0.4, 0.3, 0.9];
        let (vals, first) = tridiagonal_first_components(&diag, &off, 1.0).unwrap();
        let full = DMatrix::from_fn(5, 5, |i, j| {
            if i == j {
                diag[i]
            } else if i + 1 == j {
                off[i]
            } else if j + 1 == i {
                off[j]
            } else {
                0.0
            }
        });
        let eig = full.symmetric_eigen();
        let mut pairs: Vec<(f64, f64)> = eig
            .eigenvalues
            .iter()
            .enumerate()
            .map(|(k, &l)| (l, eig.eigenvectors[(0, k)].powi(2)))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        for (k, (l, w)) in pairs.iter().enumerate() {
            assert_relative_eq!(vals[k], *l, epsilon = 1e-13);
            assert_relative_eq!(first[k].powi(2), *w, epsilon = 1e-13);
        }
    }

    #[test]
    fn one_by_one_tridiagonal() {
        let (v, z) = tridiagonal_first_components(&[2.5], &[], 3.0).unwrap();
        assert_eq!(v, vec![2.5]);
        assert_eq!(z, vec![3.0]);
    }

    #[test]
    fn pivoted_qr_reconstructs() {
        let a = test_matrix(6, 9, 3);
        let qr = pivoted_qr(&a, 6);
        // |r_jj| non-increasing
        for j in 1..qr.steps() {
            assert!(qr.pivot_norms[j] <= qr.pivot_norms[j - 1] * (1.0 + 1e-12));
        }
        // R^T R equals P^T A^T A P
        let ap = DMatrix::from_fn(6, 9, |i, j| a[(i, qr.perm[j])]);
        let g1 = ap.transpose() * &ap;
        let g2 = qr.r.transpose() * &qr.r;
        assert!((g1 - g2).abs().max() < 1e-12);
    }

    #[test]
    fn pivot_ties_go_to_lowest_index() {
        let a = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 1.0, 0.0, 1.0, 0.0]);
        let qr = pivoted_qr(&a, 2);
        assert_eq!(qr.perm[0], 0);
        let piv = lu_row_pivots(&a.transpose(), 2);
        assert_eq!(piv[0].0, 0);
    }

    #[test]
    fn lu_pivots_pick_largest_magnitude() {
        let a = DMatrix::from_row_slice(3, 2, &[0.1, 1.0, -3.0, 0.5, 2.0, 2.0]);
        let piv = lu_row_pivots(&a, 2);
        assert_eq!(piv[0].0, 1);
        assert_eq!(piv[1].0, 2);
    }

    #[test]
    fn jacobi_svd_matches_nalgebra() {
        for (m, n) in [(7, 4), (4, 7), (5, 5)] {
            let a = test_matrix(m, n, (m * 10 + n) as u64);
            let ours = jacobi_svd(&a).unwrap();
            let mut theirs: Vec<f64> = a.clone().svd(false, false).singular_values.iter().cloned().collect();
            theirs.sort_by(|a, b| b.total_cmp(a));
            for (x, y) in ours.singular_values.iter().zip(&theirs) {
                assert_relative_eq!(x, y, epsilon = 1e-12);
            }
            let k = m.min(n);
            let s = DMatrix::from_diagonal(&DVector::from_vec(ours.singular_values.clone()));
            let rebuilt = ours.u.columns(0, k) * s * ours.v.columns(0, k).transpose();
            assert!((rebuilt - &a).abs().max() < 1e-12);
        }
    }

    #[test]
    fn lstsq_recovers_consistent_system() {
        let a = test_matrix(10, 4, 7);
        let x0 = DVector::from_vec(vec![1.0, -2.0, 0.5, 3.0]);
        let b = &a * &x0;
        let (x, res) = householder_lstsq(&a, b.as_slice()).unwrap();
        assert!((x - x0).norm() < 1e-12);
        assert!(res < 1e-12);
    }

    #[test]
    fn lstsq_rejects_rank_deficient() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, 3.0, 6.0]);
        assert!(matches!(
            householder_lstsq(&a, &[1.0, 2.0, 3.0]),
            Err(QuadError::RankDeficient { .. })
        ));
    }
}
