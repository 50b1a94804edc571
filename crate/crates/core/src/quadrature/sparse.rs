//! Smolyak sparse grids by the combination technique.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{golub_welsch, Provenance, QuadratureRule};
use crate::error::{QuadError, Result};
use crate::orthopoly::{size_cap, RecurrenceTable};

/// Merge grid spacing; coordinates closer than this are the same point.
pub const MERGE_TOL: f64 = 1e-12;
/// Merged weights smaller than this in magnitude are discarded.
pub const DROP_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Growth {
    /// `m = r`
    Linear,
    /// `m = 1` for `r = 1`, otherwise `2^(r-1) + 1`
    Exponential,
}

impl Growth {
    pub fn points(&self, r: usize) -> usize {
        match self {
            Growth::Linear => r,
            Growth::Exponential if r <= 1 => 1,
            Growth::Exponential => (1usize << (r - 1)) + 1,
        }
    }
}

impl std::str::FromStr for Growth {
    type Err = QuadError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "linear" => Ok(Growth::Linear),
            "exponential" | "exp" => Ok(Growth::Exponential),
            other => Err(QuadError::invalid(format!("unknown growth rule '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SparseGridSpec {
    pub d: usize,
    pub level: usize,
    pub growth: Growth,
    /// Merge coincident points; when false the raw signed union is returned.
    pub merged: bool,
}

impl SparseGridSpec {
    pub fn new(d: usize, level: usize, growth: Growth) -> Self {
        Self {
            d,
            level,
            growth,
            merged: true,
        }
    }

    /// Largest univariate rule used in any direction.
    pub fn max_points(&self) -> usize {
        self.growth.points(self.level + 1)
    }

    /// Multi-levels `r` with `l + 1 <= |r| <= l + d` and their coefficients
    /// `(-1)^(l + d - |r|) * C(d - 1, l + d - |r|)`.
    pub fn combination_terms(&self) -> Vec<(Vec<usize>, i64)> {
        let (d, l) = (self.d, self.level);
        let mut out = Vec::new();
        let mut r = vec![1usize; d];
        loop {
            let s: usize = r.iter().sum();
            if s > l && s <= l + d {
                let j = l + d - s;
                let c = binomial(d - 1, j) as i64;
                out.push((r.clone(), if j.is_multiple_of(2) { c } else { -c }));
            }
            // odometer over r_i in 1..=l+1 with the sum bounded by l+d
            let mut i = d;
            loop {
                if i == 0 {
                    return out;
                }
                i -= 1;
                r[i] += 1;
                if r.iter().sum::<usize>() <= l + d {
                    break;
                }
                r[i] = 1;
            }
        }
    }
}

fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    (0..k).fold(1u64, |acc, i| acc * (n - i) as u64 / (i + 1) as u64)
}

/// Sparse grid from Gauss rules of each direction's recurrence table.
pub fn sparse_grid(spec: &SparseGridSpec, tables: &[RecurrenceTable]) -> Result<QuadratureRule> {
    if spec.d == 0 {
        return Err(QuadError::invalid("dimension must be at least 1"));
    }
    if tables.len() != spec.d {
        return Err(QuadError::DimensionMismatch {
            expected: spec.d,
            got: tables.len(),
        });
    }
    let terms = spec.combination_terms();
    let raw: u128 = terms
        .iter()
        .map(|(r, _)| r.iter().map(|&ri| spec.growth.points(ri) as u128).product::<u128>())
        .sum();
    let cap = size_cap();
    if raw > cap as u128 {
        return Err(QuadError::CapExceeded { size: raw, cap });
    }

    // univariate rules cached per (direction, size)
    let mut cache: BTreeMap<(usize, usize), QuadratureRule> = BTreeMap::new();
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for (r, coef) in &terms {
        for (dim, &ri) in r.iter().enumerate() {
            let m = spec.growth.points(ri);
            if let std::collections::btree_map::Entry::Vacant(e) = cache.entry((dim, m)) {
                e.insert(golub_welsch(&tables[dim], m)?);
            }
        }
        let factors: Vec<&QuadratureRule> = r
            .iter()
            .enumerate()
            .map(|(dim, &ri)| &cache[&(dim, spec.growth.points(ri))])
            .collect();
        let mut idx = vec![0usize; spec.d];
        let count: usize = factors.iter().map(|f| f.len()).product();
        for _ in 0..count {
            points.push(idx.iter().zip(&factors).map(|(&i, f)| f.points[i][0]).collect::<Vec<_>>());
            weights.push(*coef as f64 * idx.iter().zip(&factors).map(|(&i, f)| f.weights[i]).product::<f64>());
            for k in (0..spec.d).rev() {
                idx[k] += 1;
                if idx[k] < factors[k].len() {
                    break;
                }
                idx[k] = 0;
            }
        }
    }

    if spec.merged {
        let mut merged: BTreeMap<Vec<i64>, (Vec<f64>, f64)> = BTreeMap::new();
        for (p, w) in points.into_iter().zip(weights) {
            let key: Vec<i64> = p.iter().map(|x| (x / MERGE_TOL).round() as i64).collect();
            merged.entry(key).and_modify(|e| e.1 += w).or_insert((p, w));
        }
        points = Vec::with_capacity(merged.len());
        weights = Vec::with_capacity(merged.len());
        for (_, (p, w)) in merged {
            if w.abs() >= DROP_TOL {
                points.push(p);
                weights.push(w);
            }
        }
    }
    if points.is_empty() {
        return Err(QuadError::CancelledWeights);
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-10 {
        return Err(QuadError::CancelledWeights);
    }
    let has_negative_weights = weights.iter().any(|w| *w < 0.0);
    Ok(QuadratureRule {
        points,
        weights,
        provenance: Provenance::Sparse,
        has_negative_weights,
    })
}
