//! Univariate rules, tensor and sparse grids, pseudospectral projection.

mod sparse;

pub use sparse::{sparse_grid, Growth, SparseGridSpec};

use serde::{Deserialize, Serialize};

use crate::error::{QuadError, Result};
use crate::linalg::tridiagonal_first_components;
use crate::orthopoly::{basis_matrix, size_cap, Family, MultiIndexSet, RecurrenceTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Gauss,
    Lobatto,
    ClenshawCurtis,
    Tensor,
    Sparse,
    Sampled,
    Subselected,
}

/// Points and weights in `d` dimensions. Weights sum to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRule {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub provenance: Provenance,
    /// Set only for sparse grids whose merged weights include negatives.
    #[serde(default)]
    pub has_negative_weights: bool,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, |p| p.len())
    }

    /// First coordinate of every point (convenient for univariate rules).
    pub fn nodes(&self) -> Vec<f64> {
        self.points.iter().map(|p| p[0]).collect()
    }

    /// `sum_i w_i f(z_i)`
    pub fn integrate(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(p, w)| w * f(p)).sum()
    }

    fn univariate(nodes: Vec<f64>, weights: Vec<f64>, provenance: Provenance) -> Self {
        Self {
            points: nodes.into_iter().map(|x| vec![x]).collect(),
            weights,
            provenance,
            has_negative_weights: false,
        }
    }
}

fn normalize(w: &mut [f64]) {
    let s: f64 = w.iter().sum();
    for v in w.iter_mut() {
        *v /= s;
    }
}

/// Gauss rule with `m` points from the Jacobi matrix eigen-decomposition.
pub fn golub_welsch(table: &RecurrenceTable, m: usize) -> Result<QuadratureRule> {
    if m == 0 {
        return Err(QuadError::invalid("a Gauss rule needs at least one point"));
    }
    if m > table.len() {
        return Err(QuadError::DegreeTooHigh {
            degree: 2 * m - 1,
            needed: m,
            available: table.len(),
        });
    }
    gauss_from(&table.alpha()[..m], &table.beta()[..m], table.beta()[0], Provenance::Gauss)
}

fn gauss_from(alpha: &[f64], beta: &[f64], mass: f64, provenance: Provenance) -> Result<QuadratureRule> {
    let off: Vec<f64> = beta[1..].iter().map(|b| b.sqrt()).collect();
    let (nodes, first) = tridiagonal_first_components(alpha, &off, 1.0)?;
    let mut w: Vec<f64> = first.iter().map(|z| mass * z * z).collect();
    normalize(&mut w);
    Ok(QuadratureRule::univariate(nodes, w, provenance))
}

/// Gauss-Lobatto rule with both endpoints of the support as nodes.
pub fn gauss_lobatto(table: &RecurrenceTable, m: usize) -> Result<QuadratureRule> {
    if m < 2 {
        return Err(QuadError::invalid("a Lobatto rule needs at least two points"));
    }
    let (a, b) = table.bounds().ok_or_else(|| {
        QuadError::UnsupportedFamily(format!("{} has unbounded support", table.family().name()))
    })?;
    if m - 1 > table.len() {
        return Err(QuadError::DegreeTooHigh {
            degree: 2 * m - 3,
            needed: m - 1,
            available: table.len(),
        });
    }
    let alpha = table.alpha();
    let beta = table.beta();

    // monic p_{m-1} and p_{m-2} at both endpoints
    let monic = |x: f64| -> (f64, f64) {
        let mut prev = 0.0;
        let mut cur = 1.0;
        for k in 0..m - 1 {
            let next = (x - alpha[k]) * cur - if k > 0 { beta[k] * prev } else { 0.0 };
            prev = cur;
            cur = next;
        }
        (cur, prev)
    };
    let (p1l, p0l) = monic(a);
    let (p1r, p0r) = monic(b);
    let det = p1l * p0r - p1r * p0l;
    let a_last = (a * p1l * p0r - b * p1r * p0l) / det;
    let b_last = (b - a) * p1l * p1r / det;
    if !(b_last > 0.0) {
        return Err(QuadError::PositivityLoss {
            index: m - 1,
            value: b_last,
        });
    }

    let mut al = alpha[..m - 1].to_vec();
    al.push(a_last);
    let mut be = beta[..m - 1].to_vec();
    be.push(b_last);
    let mut rule = gauss_from(&al, &be, beta[0], Provenance::Lobatto)?;
    rule.points[0][0] = a;
    rule.points[m - 1][0] = b;
    Ok(rule)
}

/// Clenshaw-Curtis rule for the uniform density on [-1, 1], nodes ascending.
pub fn clenshaw_curtis(m: usize) -> Result<QuadratureRule> {
    if m == 0 {
        return Err(QuadError::invalid("a Clenshaw-Curtis rule needs at least one point"));
    }
    if m == 1 {
        return Ok(QuadratureRule::univariate(vec![0.0], vec![1.0], Provenance::ClenshawCurtis));
    }
    let n = m - 1;
    let pi = std::f64::consts::PI;
    let mut nodes = Vec::with_capacity(m);
    let mut w = Vec::with_capacity(m);
    for j in 0..m {
        let theta = pi * j as f64 / n as f64;
        let mut s = 0.0;
        for k in 1..=n / 2 {
            let bk = if 2 * k == n { 1.0 } else { 2.0 };
            s += bk / (4.0 * (k * k) as f64 - 1.0) * (2.0 * k as f64 * theta).cos();
        }
        let c = if j == 0 || j == n { 1.0 } else { 2.0 };
        w.push(c / n as f64 * (1.0 - s) / 2.0);
        nodes.push(-theta.cos());
    }
    // exact symmetric values for the centre and the ends
    nodes[0] = -1.0;
    nodes[n] = 1.0;
    if n.is_multiple_of(2) {
        nodes[n / 2] = 0.0;
    }
    normalize(&mut w);
    Ok(QuadratureRule::univariate(nodes, w, Provenance::ClenshawCurtis))
}

/// Recurrence coefficients of a discrete measure by the Stieltjes procedure.
///
/// `density_values[i]` is the mass placed at `density_points[i]` (density
/// times discretization weight); the total is normalized to one.
pub fn stieltjes_discretized(
    density_points: &[f64],
    density_values: &[f64],
    count: usize,
) -> Result<RecurrenceTable> {
    if count == 0 {
        return Err(QuadError::invalid("coefficient count must be at least 1"));
    }
    if density_points.len() != density_values.len() {
        return Err(QuadError::DimensionMismatch {
            expected: density_points.len(),
            got: density_values.len(),
        });
    }
    if let Some(i) = density_values.iter().position(|v| !(*v >= 0.0)) {
        return Err(QuadError::NonPositiveWeight {
            index: i,
            value: density_values[i],
        });
    }
    let mass: f64 = density_values.iter().sum();
    let scale = density_values.iter().cloned().fold(0.0, f64::max);
    if !(mass > 0.0) || mass <= 1e-300 || scale == 0.0 {
        return Err(QuadError::DegenerateDensity(mass));
    }
    let w: Vec<f64> = density_values.iter().map(|v| v / mass).collect();
    let x = density_points;
    let xmax2 = x.iter().fold(1.0f64, |acc, v| acc.max(v * v));
    let floor = 1e-13 * xmax2;

    let mut alpha = Vec::with_capacity(count);
    let mut beta = vec![1.0f64];
    let mut q_prev = vec![0.0; x.len()];
    let mut q = vec![1.0; x.len()];
    for k in 0..count {
        let a: f64 = (0..x.len()).map(|i| w[i] * x[i] * q[i] * q[i]).sum();
        alpha.push(a);
        if k + 1 == count {
            break;
        }
        let sb = beta[k].sqrt();
        let mut r: Vec<f64> = (0..x.len()).map(|i| (x[i] - a) * q[i] - sb * q_prev[i]).collect();
        // one reorthogonalization pass against q_k keeps long runs stable
        let c: f64 = (0..x.len()).map(|i| w[i] * r[i] * q[i]).sum();
        for i in 0..x.len() {
            r[i] -= c * q[i];
        }
        let b: f64 = (0..x.len()).map(|i| w[i] * r[i] * r[i]).sum();
        if !(b > floor) {
            return Err(QuadError::PositivityLoss { index: k + 1, value: b });
        }
        let s = b.sqrt();
        beta.push(b);
        q_prev = std::mem::replace(&mut q, r.into_iter().map(|v| v / s).collect());
    }
    let lo = x.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    RecurrenceTable::new(Family::Custom, alpha, beta, Some((lo, hi)))
}

/// Cartesian product of univariate rules; the first factor varies slowest.
pub fn tensor_grid(rules: &[QuadratureRule]) -> Result<QuadratureRule> {
    if rules.is_empty() {
        return Err(QuadError::invalid("tensor grid needs at least one factor"));
    }
    if rules.len() == 1 {
        return Ok(rules[0].clone());
    }
    for r in rules {
        if r.dim() != 1 {
            return Err(QuadError::DimensionMismatch {
                expected: 1,
                got: r.dim(),
            });
        }
    }
    let size = rules.iter().fold(1u128, |acc, r| acc.saturating_mul(r.len() as u128));
    let cap = size_cap();
    if size > cap as u128 {
        return Err(QuadError::CapExceeded { size, cap });
    }
    let size = size as usize;
    let mut points = Vec::with_capacity(size);
    let mut weights = Vec::with_capacity(size);
    let mut idx = vec![0usize; rules.len()];
    for _ in 0..size {
        points.push(idx.iter().zip(rules).map(|(&i, r)| r.points[i][0]).collect());
        weights.push(idx.iter().zip(rules).map(|(&i, r)| r.weights[i]).product());
        for d in (0..rules.len()).rev() {
            idx[d] += 1;
            if idx[d] < rules[d].len() {
                break;
            }
            idx[d] = 0;
        }
    }
    Ok(QuadratureRule {
        points,
        weights,
        provenance: Provenance::Tensor,
        has_negative_weights: false,
    })
}

/// `x_i = sum_j f_j psi_i(z_j) w_j`
pub fn pseudospectral_coefficients(
    f_values: &[f64],
    rule: &QuadratureRule,
    basis: &MultiIndexSet,
    recurrences: &[RecurrenceTable],
) -> Result<Vec<f64>> {
    if f_values.len() != rule.len() {
        return Err(QuadError::DimensionMismatch {
            expected: rule.len(),
            got: f_values.len(),
        });
    }
    let psi = basis_matrix(basis, recurrences, &rule.points)?;
    let fw: Vec<f64> = f_values.iter().zip(&rule.weights).map(|(f, w)| f * w).collect();
    Ok((0..basis.len())
        .map(|i| psi.column(i).iter().zip(&fw).map(|(p, v)| p * v).sum())
        .collect())
}

/// First family of Padua points of degree `n` on [-1, 1]^2, in generation
/// order (first coordinate outer).
pub fn padua_points(n: usize) -> Result<Vec<[f64; 2]>> {
    if n == 0 {
        return Ok(vec![[-1.0, -1.0]]);
    }
    let pi = std::f64::consts::PI;
    let mut out = Vec::with_capacity((n + 1) * (n + 2) / 2);
    for m in 1..=n + 1 {
        let x = (pi * (m - 1) as f64 / n as f64).cos();
        for k in 1..=n / 2 + 1 {
            let t = if m % 2 == 1 { 2 * k - 1 } else { 2 * k - 2 };
            if t > n + 1 {
                continue;
            }
            out.push([x, (pi * t as f64 / (n + 1) as f64).cos()]);
        }
    }
    Ok(out)
}
