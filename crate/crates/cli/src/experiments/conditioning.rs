use anyhow::Result;
use quadkit_core::{
    christoffel_sample, condition_number, design_matrix, gram_report, monte_carlo_sample, multi_index_set,
    sample_weights, Family, IndexKind, Seed, DEFAULT_GRAM_TOL,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Experiment, Run};
use crate::commands::{gram_table, tables};
use crate::io::{num, Table};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub d: usize,
    pub max_order: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GramCase {
    pub d: usize,
    pub order: usize,
    pub ratio: f64,
}

/// Mean condition numbers of `A` under Monte Carlo and Christoffel sampling,
/// over total orders `1..=max_order` and oversampling ratios `m / n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CsConditioning {
    pub sweeps: Vec<Sweep>,
    pub ratios: Vec<f64>,
    /// Christoffel Gram matrix written for the first seed.
    pub gram: GramCase,
}

impl Default for CsConditioning {
    fn default() -> Self {
        Self {
            sweeps: vec![Sweep { d: 2, max_order: 15 }, Sweep { d: 4, max_order: 6 }],
            ratios: vec![1.2, 2.0],
            gram: GramCase {
                d: 4,
                order: 3,
                ratio: 2.0,
            },
        }
    }
}

pub const SAMPLERS: [&str; 2] = ["monte_carlo", "christoffel"];

/// `kappa(A)` for both samplers with sample weights applied; trial `t`
/// draws from stream `t` of its seed.
pub fn trial_kappas(d: usize, order: usize, m: usize, seed: Seed) -> Result<[f64; 2]> {
    let basis = multi_index_set(IndexKind::TotalOrder, d, order, None)?;
    let tabs = tables(Family::Legendre, d, order + 1)?;
    let sets = [
        monte_carlo_sample(&vec![Family::Legendre; d], m, seed)?.points,
        christoffel_sample(d, m, seed)?.points,
    ];
    let mut out = [0.0; 2];
    for (k, pts) in out.iter_mut().zip(&sets) {
        let w = sample_weights(pts, &basis, &tabs)?;
        *k = condition_number(design_matrix(&basis, &tabs, pts, &w)?.entries());
    }
    Ok(out)
}

fn rows_for(n: usize, ratio: f64) -> usize {
    ((ratio * n as f64).ceil() as usize).max(n)
}

impl Experiment for CsConditioning {
    fn run(&self, ctx: &mut Run) -> Result<()> {
        let seeds = ctx.seeds.clone();
        let mut tasks = Vec::new();
        for s in &self.sweeps {
            for &ratio in &self.ratios {
                for order in 1..=s.max_order {
                    let n = multi_index_set(IndexKind::TotalOrder, s.d, order, None)?.len();
                    tasks.push((s.d, ratio, order, n, rows_for(n, ratio)));
                }
            }
        }
        let results: Vec<Vec<[f64; 2]>> = ctx.stage("trials", |_| {
            tasks
                .par_iter()
                .map(|&(d, _, order, _, m)| {
                    seeds
                        .iter()
                        .enumerate()
                        .map(|(t, &s)| trial_kappas(d, order, m, Seed::new(s, t as u64)))
                        .collect::<Result<Vec<_>>>()
                })
                .collect()
        })?;

        let mut raw = Table::new(&["d", "ratio", "order", "n", "m", "seed", "sampler", "kappa"]);
        let mut summary = Table::new(&[
            "d",
            "ratio",
            "order",
            "n",
            "m",
            "monte_carlo_mean",
            "christoffel_mean",
            "christoffel_lower",
        ]);
        for (&(d, ratio, order, n, m), kappas) in tasks.iter().zip(&results) {
            let head = vec![d.to_string(), num(ratio), order.to_string(), n.to_string(), m.to_string()];
            for (t, k) in kappas.iter().enumerate() {
                for (s, v) in SAMPLERS.iter().zip(k) {
                    let mut row = head.clone();
                    row.extend([seeds[t].to_string(), s.to_string(), num(*v)]);
                    raw.push(row);
                }
            }
            let mean = |j: usize| kappas.iter().map(|k| k[j]).sum::<f64>() / kappas.len() as f64;
            let (mc, ch) = (mean(0), mean(1));
            let mut row = head;
            row.extend([num(mc), num(ch), ((ch <= mc) as u8).to_string()]);
            summary.push(row);
        }
        ctx.table("conditioning.csv", &raw)?;
        ctx.table("summary.csv", &summary)?;

        let g = self.gram;
        let (report, kappa_a) = ctx.stage("christoffel_gram", |_| {
            let basis = multi_index_set(IndexKind::TotalOrder, g.d, g.order, None)?;
            let tabs = tables(Family::Legendre, g.d, g.order + 1)?;
            let m = rows_for(basis.len(), g.ratio);
            let pts = christoffel_sample(g.d, m, Seed::new(seeds[0], 0))?.points;
            let w = sample_weights(&pts, &basis, &tabs)?;
            let a = design_matrix(&basis, &tabs, &pts, &w)?;
            Ok((gram_report(&a, DEFAULT_GRAM_TOL), condition_number(a.entries())))
        })?;
        ctx.table("christoffel_gram.csv", &gram_table(&report))?;
        let mut t = Table::new(&["seed", "kappa_a", "kappa_gram", "max_offdiag_error"]);
        t.push(vec![
            seeds[0].to_string(),
            num(kappa_a),
            num(condition_number(&report.matrix())),
            num(report.max_offdiag_error),
        ]);
        ctx.table("christoffel_gram_summary.csv", &t)
    }
}
