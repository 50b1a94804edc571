//! Greedy S-optimal row insertion with low-rank determinant updates.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use super::{check_k, finish, qr_subselect, Selection, Strategy};
use crate::error::{QuadError, Result};
use crate::linalg::pick_pivot;
use crate::orthopoly::DesignMatrix;

/// `det(M + a a^T) / det(M)` given `M^{-1}`.
pub fn insertion_det_ratio(minv: &DMatrix<f64>, a: &DVector<f64>) -> f64 {
    1.0 + a.dot(&(minv * a))
}

/// `det(M - a a^T + b b^T) / det(M)` given `M^{-1}`: row `a` leaves, `b` enters.
pub fn swap_det_ratio(minv: &DMatrix<f64>, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let ma = minv * a;
    let aa = a.dot(&ma);
    let ab = b.dot(&ma);
    let bb = b.dot(&(minv * b));
    (1.0 - aa) * (1.0 + bb) + ab * ab
}

/// Log of the S-optimality objective `(sqrt(det G) / prod_j ||col_j||)^(1/n)`.
pub(crate) fn log_s_optimality(gram: &DMatrix<f64>) -> Option<f64> {
    let n = gram.nrows();
    let chol = gram.clone().cholesky()?;
    let half_logdet: f64 = chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum();
    let half_cols: f64 = gram.diagonal().iter().map(|d| 0.5 * d.ln()).sum();
    Some((half_logdet - half_cols) / n as f64)
}

/// Adds rows one at a time, each maximizing the S-optimality objective.
///
/// Starts from `seed_rows` (default: the `n` rows picked by pivoted QR).
pub fn greedy_det_subselect(a: &DesignMatrix, k: usize, seed_rows: Option<&[usize]>) -> Result<Selection> {
    check_k(a, k)?;
    let (m, n) = (a.m(), a.n());
    let e = a.entries();
    let seed: Vec<usize> = match seed_rows {
        Some(rows) => rows.to_vec(),
        None if k == m => (0..m).collect(),
        None => qr_subselect(a, n)?.row_indices,
    };
    let mut taken = vec![false; m];
    for &r in &seed {
        if r >= m {
            return Err(QuadError::IndexOutOfRange { index: r, rows: m });
        }
        if taken[r] {
            return Err(QuadError::invalid(format!("seed row {r} repeated")));
        }
        taken[r] = true;
    }
    if seed.len() > k {
        return Err(QuadError::invalid("more seed rows than k"));
    }

    let sub = e.select_rows(&seed);
    let gram = sub.transpose() * &sub;
    let mut minv = gram
        .clone()
        .cholesky()
        .ok_or(QuadError::SingularGramian)?
        .inverse();
    let mut colnorm2: Vec<f64> = gram.diagonal().iter().cloned().collect();

    let mut rows = seed;
    let mut steps = 0;
    while rows.len() < k {
        let cand: Vec<usize> = (0..m).filter(|&r| !taken[r]).collect();
        let scores: Vec<f64> = cand
            .iter()
            .map(|&r| {
                let v: DVector<f64> = e.row(r).transpose();
                let lift = 0.5 * insertion_det_ratio(&minv, &v).ln();
                let cols: f64 = v
                    .iter()
                    .zip(&colnorm2)
                    .map(|(x, c)| 0.5 * (x * x / c).ln_1p())
                    .sum();
                lift - cols
            })
            .collect();
        let r = cand[pick_pivot(&scores, |i| cand[i])];
        let v: DVector<f64> = e.row(r).transpose();
        let mv = &minv * &v;
        let denom = 1.0 + v.dot(&mv);
        minv -= &mv * mv.transpose() / denom;
        for (c, x) in colnorm2.iter_mut().zip(v.iter()) {
            *c += x * x;
        }
        taken[r] = true;
        rows.push(r);
        steps += 1;
    }

    let sub = e.select_rows(&rows);
    let mut extra = BTreeMap::new();
    if let Some(ls) = log_s_optimality(&(sub.transpose() * &sub)) {
        extra.insert("s_optimality".to_string(), ls.exp());
    }
    Ok(finish(a, rows, Strategy::Greedy, steps, None, vec![], extra))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::spd_log_det;
    use crate::orthopoly::{design_matrix, multi_index_set, recurrence_coefficients, Family, IndexKind};
    use crate::sampling::{monte_carlo_sample, Seed};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn design(m: usize, seed: u64) -> DesignMatrix {
        let basis = multi_index_set(IndexKind::TotalOrder, 2, 2, None).unwrap();
        let tabs = vec![recurrence_coefficients(Family::Legendre, 3).unwrap(); 2];
        let pts = monte_carlo_sample(&[Family::Legendre; 2], m, Seed::new(seed, 0)).unwrap().points;
        design_matrix(&basis, &tabs, &pts, &vec![1.0 / m as f64; m]).unwrap()
    }

    #[test]
    fn low_rank_updates_match_recomputed_determinants() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..100 {
            let n = 2 + trial % 4;
            let mut x = DMatrix::from_fn(n + 3, n, |_, _| rng.gen_range(-1.0..1.0));
            let gram = x.transpose() * &x;
            let minv = gram.clone().try_inverse().unwrap();
            let b = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
            let ld0 = spd_log_det(&gram).unwrap();
            let ins = spd_log_det(&(&gram + &b * b.transpose())).unwrap();
            let r1 = insertion_det_ratio(&minv, &b);
            assert!(((ins - ld0).exp() - r1).abs() < 1e-9 * r1);

            let a: DVector<f64> = x.row(0).transpose();
            let r2 = swap_det_ratio(&minv, &a, &b);
            x.set_row(0, &b.transpose());
            let after = x.transpose() * &x;
            let direct = after.determinant() / gram.determinant();
            assert!((direct - r2).abs() < 1e-9 * direct.abs().max(1e-300), "{direct} vs {r2}");
        }
    }

    #[test]
    fn all_rows_when_k_is_m() {
        let a = design(9, 1);
        let sel = greedy_det_subselect(&a, 9, None).unwrap();
        assert_eq!(sel.row_indices, (0..9).collect::<Vec<_>>());
    }

    #[test]
    fn singular_seed_is_rejected() {
        let a = design(20, 2);
        assert_eq!(greedy_det_subselect(&a, 8, Some(&[0, 1])), Err(QuadError::SingularGramian));
        assert!(greedy_det_subselect(&a, 8, Some(&[0, 0, 1, 2, 3, 4])).is_err());
        assert!(greedy_det_subselect(&a, 8, Some(&[40])).is_err());
    }

    #[test]
    fn greedy_increases_s_optimality() {
        let a = design(60, 5);
        let base = greedy_det_subselect(&a, 6, None).unwrap();
        let more = greedy_det_subselect(&a, 12, None).unwrap();
        assert_eq!(more.k(), 12);
        assert!(base.row_indices.iter().all(|r| more.row_indices.contains(r)));
        assert!(more.objective_report.log_det.unwrap() > base.objective_report.log_det.unwrap());
    }
}
