use anyhow::{ensure, Result};
use quadkit_core::{
    design_matrix, gauss_lobatto, gram_report, multi_index_set, newton_subselect, nnls_weights, padua_points,
    tensor_grid, Family, IndexKind, NewtonOptions, DEFAULT_GRAM_TOL,
};
use serde::{Deserialize, Serialize};

use super::{Experiment, Run};
use crate::commands::{gram_table, tables};
use crate::io::{num, points_table, Table};

/// Newton subselection on the `(N+1) x (N+2)` Chebyshev-Lobatto grid with a
/// total order `N` basis, checked against the closed-form Padua points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Padua {
    pub n: usize,
    pub lambda: f64,
    pub swap_refinement: bool,
}

impl Default for Padua {
    fn default() -> Self {
        let o = NewtonOptions::default();
        Self {
            n: 4,
            lambda: o.lambda,
            swap_refinement: o.swap_refinement,
        }
    }
}

fn same_point(p: &[f64], q: &[f64; 2]) -> bool {
    (p[0] - q[0]).abs() < 1e-12 && (p[1] - q[1]).abs() < 1e-12
}

fn label(idx: &[usize]) -> String {
    format!("({})", idx.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(","))
}

impl Experiment for Padua {
    fn run(&self, ctx: &mut Run) -> Result<()> {
        let n = self.n;
        let tabs = tables(Family::Chebyshev1, 2, n + 4)?;
        let basis = multi_index_set(IndexKind::TotalOrder, 2, n, None)?;

        let (grid, a) = ctx.stage("grid", |_| {
            ensure!(n >= 1, "n must be at least 1");
            let grid = tensor_grid(&[gauss_lobatto(&tabs[0], n + 1)?, gauss_lobatto(&tabs[0], n + 2)?])?;
            let a = design_matrix(&basis, &tabs, &grid.points, &grid.weights)?;
            Ok((grid, a))
        })?;
        let full = gram_report(&a, DEFAULT_GRAM_TOL);
        ctx.table("grid.csv", &points_table(&grid.points, Some(&grid.weights)))?;
        ctx.table("gram_full.csv", &gram_table(&full))?;

        let opts = NewtonOptions {
            lambda: self.lambda,
            swap_refinement: self.swap_refinement,
            ..NewtonOptions::default()
        };
        let sel = ctx.stage("newton", |_| Ok(newton_subselect(&a, basis.len(), &opts)?))?;
        let padua = padua_points(n)?;
        let chosen: Vec<Vec<f64>> = sel.row_indices.iter().map(|&r| grid.points[r].clone()).collect();
        let mut t = Table::new(&["row", "x1", "x2", "z", "padua"]);
        for (&r, p) in sel.row_indices.iter().zip(&chosen) {
            let z = sel.z_relaxed.as_ref().map_or(String::new(), |z| num(z[r]));
            let hit = padua.iter().any(|q| same_point(p, q));
            t.push(vec![r.to_string(), num(p[0]), num(p[1]), z, (hit as u8).to_string()]);
        }
        ctx.table("selection.csv", &t)?;
        let matches = chosen.len() == padua.len()
            && padua.iter().all(|q| chosen.iter().any(|p| same_point(p, q)));
        let mut pt = Table::new(&["x1", "x2"]);
        for q in &padua {
            pt.push(vec![num(q[0]), num(q[1])]);
        }
        ctx.table("padua_points.csv", &pt)?;

        let (w, sub) = ctx.stage("moments", |_| {
            let mut e = vec![0.0; basis.len()];
            e[0] = 1.0;
            let w = nnls_weights(&chosen, &basis, &tabs, &e)?;
            let keep: Vec<usize> = (0..chosen.len()).filter(|&i| w.weights[i] > 0.0).collect();
            let pts: Vec<Vec<f64>> = keep.iter().map(|&i| chosen[i].clone()).collect();
            let ww: Vec<f64> = keep.iter().map(|&i| w.weights[i]).collect();
            let sub = gram_report(&design_matrix(&basis, &tabs, &pts, &ww)?, DEFAULT_GRAM_TOL);
            Ok((w, sub))
        })?;
        let mut wt = Table::new(&["row", "x1", "x2", "w"]);
        for ((&r, p), v) in sel.row_indices.iter().zip(&chosen).zip(&w.weights) {
            wt.push(vec![r.to_string(), num(p[0]), num(p[1]), num(*v)]);
        }
        ctx.table("nnls_weights.csv", &wt)?;
        ctx.table("gram_selected.csv", &gram_table(&sub))?;

        let failing = |g: &quadkit_core::GramReport| {
            let mut idx: Vec<usize> = g.failures().iter().flat_map(|&(p, q)| [p, q]).collect();
            idx.sort_unstable();
            idx.dedup();
            idx.iter().map(|&j| label(&basis.indices[j])).collect::<Vec<_>>().join(" ")
        };
        let mut s = Table::new(&["quantity", "value"]);
        s.push(vec!["matches_padua".into(), (matches as u8).to_string()]);
        s.push(vec!["newton_iterations".into(), sel.objective_report.iterations.to_string()]);
        s.push(vec!["nnls_residual".into(), num(w.residual_norm)]);
        s.push(vec!["full_grid_failing_indices".into(), failing(&full)]);
        s.push(vec!["selected_failing_indices".into(), failing(&sub)]);
        ctx.table("summary.csv", &s)
    }
}
