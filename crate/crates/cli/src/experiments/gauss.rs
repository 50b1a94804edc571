use anyhow::Result;
use quadkit_core::{
    christoffel_sample, design_matrix, golub_welsch, multi_index_set, sample_weights, subselect, tensor_grid,
    DesignMatrix, Family, IndexKind, MultiIndexSet, Seed, Selection, Strategy, SubselectOptions,
};
use serde::{Deserialize, Serialize};

use super::{Experiment, Run};
use crate::commands::tables;
use crate::io::{num, Table};

fn run_strategies(a: &DesignMatrix, k: usize, strategies: &[Strategy]) -> Result<Vec<Selection>> {
    strategies
        .iter()
        .map(|&s| Ok(subselect(a, k, s, &SubselectOptions::default())?))
        .collect()
}

fn kappa_cell(sel: &Selection) -> String {
    sel.objective_report.condition_number.map_or_else(|| "inf".into(), num)
}

/// `k` rows picked from a fine Gauss-Legendre grid with a degree `k - 1`
/// basis, compared with the `k`-point Gauss-Legendre nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SubsampleGauss1d {
    pub candidates: usize,
    pub ks: Vec<usize>,
    pub strategies: Vec<Strategy>,
}

impl Default for SubsampleGauss1d {
    fn default() -> Self {
        Self {
            candidates: 101,
            ks: vec![4, 8],
            strategies: vec![Strategy::Qr, Strategy::Lu, Strategy::Svd],
        }
    }
}

impl Experiment for SubsampleGauss1d {
    fn run(&self, ctx: &mut Run) -> Result<()> {
        let tab = tables(Family::Legendre, 1, self.candidates.max(2))?.remove(0);
        let grid = golub_welsch(&tab, self.candidates)?;
        let mut summary = Table::new(&["k", "strategy", "max_deviation", "condition_number"]);
        for &k in &self.ks {
            let (truth, sels) = ctx.stage(&format!("k{k}"), |_| {
                let a = design_matrix(&MultiIndexSet::univariate(k - 1), std::slice::from_ref(&tab), &grid.points, &grid.weights)?;
                let truth = golub_welsch(&tab, k)?.nodes();
                Ok((truth, run_strategies(&a, k, &self.strategies)?))
            })?;
            let mut t = Table::new(&["strategy", "j", "node", "gauss_node", "deviation"]);
            for sel in &sels {
                let mut nodes: Vec<f64> = sel.row_indices.iter().map(|&r| grid.points[r][0]).collect();
                nodes.sort_by(f64::total_cmp);
                let name = sel.objective_report.strategy.name();
                let mut worst = 0.0f64;
                for (j, (x, g)) in nodes.iter().zip(&truth).enumerate() {
                    worst = worst.max((x - g).abs());
                    t.push(vec![name.into(), j.to_string(), num(*x), num(*g), num((x - g).abs())]);
                }
                summary.push(vec![k.to_string(), name.into(), num(worst), kappa_cell(sel)]);
            }
            ctx.table(&format!("nodes_k{k}.csv"), &t)?;
        }
        ctx.table("summary.csv", &summary)
    }
}

/// Tensor-order basis rows picked from a dense tensor Gauss grid and from
/// random Chebyshev samples, compared with the tensor Gauss rule of the
/// basis order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SubsampleGauss2d {
    /// Points per direction of the candidate tensor grid.
    pub grid_points: usize,
    pub basis_order: usize,
    pub random_candidates: usize,
    /// Weight the random candidates by reciprocal Christoffel values; when
    /// false every candidate gets weight `1/m`.
    pub sample_weights: bool,
    pub strategies: Vec<Strategy>,
}

impl Default for SubsampleGauss2d {
    fn default() -> Self {
        Self {
            grid_points: 51,
            basis_order: 3,
            random_candidates: 2601,
            sample_weights: true,
            strategies: vec![Strategy::Qr, Strategy::Lu, Strategy::Svd],
        }
    }
}

/// Largest distance from a reference point to its nearest selected point.
fn coverage_gap(reference: &[Vec<f64>], chosen: &[Vec<f64>]) -> f64 {
    reference
        .iter()
        .map(|r| {
            chosen
                .iter()
                .map(|c| r.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

impl Experiment for SubsampleGauss2d {
    fn run(&self, ctx: &mut Run) -> Result<()> {
        let p = self.basis_order;
        let basis = multi_index_set(IndexKind::TensorOrder, 2, p, None)?;
        let k = basis.len();
        let tabs = tables(Family::Legendre, 2, self.grid_points.max(p + 2))?;
        let g1 = golub_welsch(&tabs[0], p + 1)?;
        let reference = tensor_grid(&[g1.clone(), g1])?.points;
        let seed = Seed::new(ctx.seeds[0], 0);

        let sources = ctx.stage("candidates", |_| {
            let gg = golub_welsch(&tabs[0], self.grid_points)?;
            let grid = tensor_grid(&[gg.clone(), gg])?;
            let tensor = design_matrix(&basis, &tabs, &grid.points, &grid.weights)?;
            let pts = christoffel_sample(2, self.random_candidates, seed)?.points;
            let w = if self.sample_weights {
                sample_weights(&pts, &basis, &tabs)?
            } else {
                vec![1.0 / pts.len() as f64; pts.len()]
            };
            let random = design_matrix(&basis, &tabs, &pts, &w)?;
            Ok([("tensor", tensor), ("chebyshev", random)])
        })?;

        let mut summary = Table::new(&["candidates", "strategy", "k", "max_gap_to_gauss", "condition_number"]);
        for (name, a) in &sources {
            let sels = ctx.stage(&format!("select_{name}"), |_| run_strategies(a, k, &self.strategies))?;
            let mut t = Table::new(&["strategy", "row", "x1", "x2"]);
            for sel in &sels {
                let s = sel.objective_report.strategy.name();
                let chosen: Vec<Vec<f64>> = sel.row_indices.iter().map(|&r| a.points()[r].clone()).collect();
                for (&r, c) in sel.row_indices.iter().zip(&chosen) {
                    t.push(vec![s.into(), r.to_string(), num(c[0]), num(c[1])]);
                }
                summary.push(vec![
                    name.to_string(),
                    s.into(),
                    k.to_string(),
                    num(coverage_gap(&reference, &chosen)),
                    kappa_cell(sel),
                ]);
            }
            ctx.table(&format!("{name}_selection.csv"), &t)?;
        }
        let mut r = Table::new(&["x1", "x2"]);
        for p in &reference {
            r.push(vec![num(p[0]), num(p[1])]);
        }
        ctx.table("reference.csv", &r)?;
        ctx.table("summary.csv", &summary)
    }
}
