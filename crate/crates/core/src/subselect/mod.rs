//! Choosing `k` rows of a design matrix to form a smaller quadrature rule.
//!
//! Five strategies share one result type: pivoted QR on `A^T`, LU with row
//! pivoting on `A`, SVD followed by pivoted QR, a log-det convex relaxation
//! solved by Newton's method, and greedy S-optimal insertion.

mod greedy;
mod newton;
mod nnls;
mod pivoting;

pub use greedy::{greedy_det_subselect, insertion_det_ratio, swap_det_ratio};
pub use newton::{newton_subselect, NewtonOptions};
pub use nnls::{nnls, nnls_weights, NnlsResult, NNLS_EXACT_TOL};
pub use pivoting::{lu_subselect, pivoting_constant, qr_subselect, svd_subselect, ConditionBound};

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::diagnostics::condition_number;
use crate::error::{QuadError, Result};
use crate::linalg::spd_log_det;
use crate::orthopoly::DesignMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Qr,
    Lu,
    Svd,
    Newton,
    Greedy,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::Qr,
        Strategy::Lu,
        Strategy::Svd,
        Strategy::Newton,
        Strategy::Greedy,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Qr => "qr",
            Strategy::Lu => "lu",
            Strategy::Svd => "svd",
            Strategy::Newton => "newton",
            Strategy::Greedy => "greedy",
        }
    }
}

impl std::str::FromStr for Strategy {
    type Err = QuadError;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .iter()
            .find(|t| t.name() == s.trim().to_ascii_lowercase())
            .copied()
            .ok_or_else(|| QuadError::invalid(format!("unknown strategy '{s}'")))
    }
}

/// Scalar diagnostics common to every strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveReport {
    pub strategy: Strategy,
    /// `kappa` of the selected rows of `A`; `None` when singular.
    pub condition_number: Option<f64>,
    /// `log det` of the selected Gramian; `None` when singular.
    pub log_det: Option<f64>,
    pub iterations: usize,
    /// Objective value after each accepted step (Newton only).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub objective_history: Vec<f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    /// Distinct, ascending.
    pub row_indices: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_relaxed: Option<Vec<f64>>,
    /// Selected design weights divided by their sum.
    pub renormalized_weights: Vec<f64>,
    pub objective_report: ObjectiveReport,
    /// Fingerprint of the design matrix the rows refer to.
    pub design_checksum: String,
}

impl Selection {
    pub fn k(&self) -> usize {
        self.row_indices.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[derive(Default)]
pub struct SubselectOptions {
    pub newton: NewtonOptions,
    /// Starting rows for the greedy strategy (default: QR with `k = n`).
    pub seed_rows: Option<Vec<usize>>,
}


pub fn subselect(a: &DesignMatrix, k: usize, strategy: Strategy, opts: &SubselectOptions) -> Result<Selection> {
    match strategy {
        Strategy::Qr => qr_subselect(a, k),
        Strategy::Lu => lu_subselect(a, k),
        Strategy::Svd => svd_subselect(a, k),
        Strategy::Newton => newton_subselect(a, k, &opts.newton),
        Strategy::Greedy => greedy_det_subselect(a, k, opts.seed_rows.as_deref()),
    }
}

pub(crate) fn check_k(a: &DesignMatrix, k: usize) -> Result<()> {
    let (m, n) = (a.m(), a.n());
    if k < n || k > m {
        return Err(QuadError::invalid(format!(
            "need n <= k <= m, got n={n}, k={k}, m={m}"
        )));
    }
    Ok(())
}

/// Log det and condition number of the rows `rows` of `A`.
pub fn evaluate_rows(a: &DMatrix<f64>, rows: &[usize]) -> (Option<f64>, Option<f64>) {
    let sub = a.select_rows(rows);
    let ld = spd_log_det(&(sub.transpose() * &sub)).filter(|v| v.is_finite());
    let kappa = Some(condition_number(&sub)).filter(|v| v.is_finite());
    (ld, kappa)
}

pub(crate) fn finish(
    a: &DesignMatrix,
    mut rows: Vec<usize>,
    strategy: Strategy,
    iterations: usize,
    z_relaxed: Option<Vec<f64>>,
    objective_history: Vec<f64>,
    extra: BTreeMap<String, f64>,
) -> Selection {
    rows.sort_unstable();
    rows.dedup();
    let (log_det, kappa) = evaluate_rows(a.entries(), &rows);
    let w: Vec<f64> = rows.iter().map(|&r| a.weights()[r]).collect();
    let tau: f64 = w.iter().sum();
    Selection {
        renormalized_weights: w.iter().map(|v| v / tau).collect(),
        row_indices: rows,
        z_relaxed,
        objective_report: ObjectiveReport {
            strategy,
            condition_number: kappa,
            log_det,
            iterations,
            objective_history,
            extra,
        },
        design_checksum: a.checksum(),
    }
}
