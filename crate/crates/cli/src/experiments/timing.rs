use std::time::Instant;

use anyhow::Result;
use quadkit_core::{
    design_matrix, golub_welsch, multi_index_set, sample_weights, subselect, tensor_grid, Family, IndexKind, Strategy,
    SubselectOptions,
};
use serde::{Deserialize, Serialize};

use super::{Experiment, Run};
use crate::commands::tables;
use crate::io::{num, Table};

/// Candidates below this many rows are recorded but never compared.
pub const ORDERING_MIN_ROWS: usize = 500;

/// Wall clock of each strategy selecting `k = n` rows from the
/// `(order + 1)^d` Chebyshev grid with a total order Legendre basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Timing {
    pub d: usize,
    pub min_order: usize,
    pub max_order: usize,
    pub strategies: Vec<Strategy>,
}

impl Default for Timing {
    fn default() -> Self {
        Self {
            d: 3,
            min_order: 2,
            max_order: 8,
            strategies: Strategy::ALL.to_vec(),
        }
    }
}

impl Experiment for Timing {
    fn run(&self, ctx: &mut Run) -> Result<()> {
        let mut times = Table::new(&["strategy", "order", "n", "m", "seconds", "condition_number"]);
        let mut ordering = Table::new(&["order", "m", "fastest_first", "qr_lu_fastest", "compared"]);
        for order in self.min_order..=self.max_order {
            let rows = ctx.stage(&format!("order{order}"), |_| {
                let tabs = tables(Family::Legendre, self.d, order + 1)?;
                let cheb = tables(Family::Chebyshev1, 1, order + 2)?.remove(0);
                let g = golub_welsch(&cheb, order + 1)?;
                let grid = tensor_grid(&vec![g; self.d])?;
                let basis = multi_index_set(IndexKind::TotalOrder, self.d, order, None)?;
                let w = sample_weights(&grid.points, &basis, &tabs)?;
                let a = design_matrix(&basis, &tabs, &grid.points, &w)?;
                let mut rows = Vec::new();
                for &s in &self.strategies {
                    let t = Instant::now();
                    let sel = subselect(&a, a.n(), s, &SubselectOptions::default())?;
                    rows.push((s, a.n(), a.m(), t.elapsed().as_secs_f64(), sel.objective_report.condition_number));
                }
                Ok(rows)
            })?;
            for &(s, n, m, secs, kappa) in &rows {
                times.push(vec![
                    s.name().into(),
                    order.to_string(),
                    n.to_string(),
                    m.to_string(),
                    num(secs),
                    kappa.map_or_else(|| "inf".into(), num),
                ]);
            }
            let mut by_time = rows.clone();
            by_time.sort_by(|a, b| a.3.total_cmp(&b.3));
            let names: Vec<&str> = by_time.iter().map(|r| r.0.name()).collect();
            let m = rows.first().map_or(0, |r| r.2);
            let compared = m >= ORDERING_MIN_ROWS;
            let fast: Vec<Strategy> = by_time.iter().take(2).map(|r| r.0).collect();
            let qr_lu = fast.contains(&Strategy::Qr) && fast.contains(&Strategy::Lu);
            ordering.push(vec![
                order.to_string(),
                m.to_string(),
                names.join(" "),
                if compared { (qr_lu as u8).to_string() } else { String::new() },
                (compared as u8).to_string(),
            ]);
        }
        ctx.table("timing.csv", &times)?;
        ctx.table("ordering.csv", &ordering)
    }
}
