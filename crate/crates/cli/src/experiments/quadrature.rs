use anyhow::Result;
use quadkit_core::{
    design_matrix, golub_welsch, gram_report, multi_index_set, pseudospectral_coefficients, sparse_grid, tensor_grid,
    Family, Growth, IndexKind, MultiIndexSet, QuadratureRule, SparseGridSpec, DEFAULT_GRAM_TOL,
};
use serde::{Deserialize, Serialize};

use super::{Experiment, Run};
use crate::args::RuleKind;
use crate::commands::{build_rule, coefficient_table, gram_table, tables};
use crate::io::{num, points_table, Table};

/// Gram matrices of three `m`-point rules over degrees `0 .. m-1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DoeGram {
    pub m: usize,
    pub tol: f64,
}

impl Default for DoeGram {
    fn default() -> Self {
        Self {
            m: 5,
            tol: DEFAULT_GRAM_TOL,
        }
    }
}

/// Largest `s` such that every entry with `p + q <= s` passes.
pub fn exact_through(frontier: &[Vec<bool>]) -> usize {
    let n = frontier.len();
    let mut first_fail = 2 * n.saturating_sub(1) + 1;
    for (p, row) in frontier.iter().enumerate() {
        for (q, ok) in row.iter().enumerate() {
            if !ok {
                first_fail = first_fail.min(p + q);
            }
        }
    }
    first_fail.saturating_sub(1)
}

impl Experiment for DoeGram {
    fn run(&self, ctx: &mut Run) -> Result<()> {
        let rules = [
            ("gauss", RuleKind::Gauss),
            ("lobatto", RuleKind::Lobatto),
            ("clenshaw_curtis", RuleKind::ClenshawCurtis),
        ];
        let mut summary = Table::new(&["rule", "m", "exact_through", "max_offdiag_error", "failures"]);
        for (name, kind) in rules {
            let report = ctx.stage(name, |_| {
                let rule = build_rule(kind, Family::Legendre, self.m)?;
                let basis = MultiIndexSet::univariate(self.m - 1);
                let a = design_matrix(&basis, &tables(Family::Legendre, 1, self.m + 1)?, &rule.points, &rule.weights)?;
                Ok(gram_report(&a, self.tol))
            })?;
            ctx.table(&format!("gram_{name}.csv"), &gram_table(&report))?;
            summary.push(vec![
                name.into(),
                self.m.to_string(),
                exact_through(&report.exactness_frontier).to_string(),
                num(report.max_offdiag_error),
                report.failures().len().to_string(),
            ]);
        }
        ctx.table("frontier.csv", &summary)
    }
}

/// Pseudospectral coefficients of `exp(3 z1 + z2)` on a tensor Gauss grid and
/// on sparse grids, with point counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SparseDecay {
    /// Polynomial order of each tensor factor; the rule has `order + 1` points.
    pub order: usize,
    pub linear_levels: Vec<usize>,
    pub exponential_levels: Vec<usize>,
    /// Total order of the basis projected onto with the sparse grids.
    pub sparse_basis_order: usize,
}

impl Default for SparseDecay {
    fn default() -> Self {
        Self {
            order: 35,
            linear_levels: vec![12],
            exponential_levels: vec![5, 6],
            sparse_basis_order: 12,
        }
    }
}

fn model(p: &[f64]) -> f64 {
    (3.0 * p[0] + p[1]).exp()
}

fn reference_count(growth: Growth, level: usize) -> Option<usize> {
    match (growth, level) {
        (Growth::Linear, 12) => Some(1015),
        (Growth::Exponential, 5 | 6) => Some(667),
        _ => None,
    }
}

fn convention(growth: Growth) -> &'static str {
    match growth {
        Growth::Linear => "m=r",
        Growth::Exponential => "m=1 (r=1); 2^(r-1)+1",
    }
}

fn coefficients(rule: &QuadratureRule, basis: &MultiIndexSet) -> Result<Vec<f64>> {
    let f: Vec<f64> = rule.points.iter().map(|p| model(p)).collect();
    let k = basis.max_degrees().into_iter().max().unwrap_or(0);
    Ok(pseudospectral_coefficients(&f, rule, basis, &tables(Family::Legendre, 2, k + 1)?)?)
}

impl Experiment for SparseDecay {
    fn run(&self, ctx: &mut Run) -> Result<()> {
        let mut counts = Table::new(&["grid", "growth", "level", "points", "reference_points", "relative_difference"]);
        let push = |counts: &mut Table, grid: &str, growth: &str, level: String, got: usize, want: Option<usize>| {
            let (w, rel) = match want {
                Some(w) => (w.to_string(), num(got as f64 / w as f64 - 1.0)),
                None => (String::new(), String::new()),
            };
            counts.push(vec![grid.into(), growth.into(), level, got.to_string(), w, rel]);
        };

        let (rule, x, basis) = ctx.stage("tensor", |_| {
            let g = golub_welsch(&tables(Family::Legendre, 1, self.order + 1)?[0], self.order + 1)?;
            let rule = tensor_grid(&[g.clone(), g])?;
            let basis = multi_index_set(IndexKind::TensorOrder, 2, self.order, None)?;
            let x = coefficients(&rule, &basis)?;
            Ok((rule, x, basis))
        })?;
        ctx.table("tensor_points.csv", &points_table(&rule.points, Some(&rule.weights)))?;
        ctx.table("tensor_coefficients.csv", &coefficient_table(&basis, &x))?;
        let want = if self.order == 35 { Some(1296) } else { None };
        push(&mut counts, "tensor", "", self.order.to_string(), rule.len(), want);

        let runs = self
            .linear_levels
            .iter()
            .map(|&l| (Growth::Linear, l))
            .chain(self.exponential_levels.iter().map(|&l| (Growth::Exponential, l)));
        let sparse_basis = multi_index_set(IndexKind::TotalOrder, 2, self.sparse_basis_order, None)?;
        for (growth, level) in runs {
            let tag = format!("sparse_{}_l{level}", if growth == Growth::Linear { "linear" } else { "exponential" });
            let (rule, x) = ctx.stage(&tag, |_| {
                let spec = SparseGridSpec::new(2, level, growth);
                let rule = sparse_grid(&spec, &tables(Family::Legendre, 2, spec.max_points())?)?;
                let x = coefficients(&rule, &sparse_basis)?;
                Ok((rule, x))
            })?;
            ctx.table(&format!("{tag}_points.csv"), &points_table(&rule.points, Some(&rule.weights)))?;
            ctx.table(&format!("{tag}_coefficients.csv"), &coefficient_table(&sparse_basis, &x))?;
            push(
                &mut counts,
                "sparse",
                convention(growth),
                level.to_string(),
                rule.len(),
                reference_count(growth, level),
            );
        }
        ctx.table("counts.csv", &counts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_through_reads_the_first_failing_antidiagonal() {
        let mut f = vec![vec![true; 5]; 5];
        assert_eq!(exact_through(&f), 8);
        f[4][4] = false;
        assert_eq!(exact_through(&f), 7);
        f[2][3] = false;
        assert_eq!(exact_through(&f), 4);
    }
}
