//! Orthonormal polynomial families, multi-index sets and the weighted design
//! matrix `A(i, j) = psi_j(z_i) * sqrt(w_i)`.
//!
//! Every density integrates to one, so `psi_0 == 1` for all families.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{QuadError, Result};

/// Default cap on the number of tensor points or multi-indices.
pub const DEFAULT_SIZE_CAP: usize = 10_000_000;

/// Safety cap on product sizes, overridable with `QUADKIT_CAP`.
pub fn size_cap() -> usize {
    std::env::var("QUADKIT_CAP")
        .ok()
        .and_then(|s| s.trim().parse::<f64>().ok())
        .filter(|v| v.is_finite() && *v >= 1.0)
        .map(|v| v as usize)
        .unwrap_or(DEFAULT_SIZE_CAP)
}

/// A univariate probability density with a known (or computed) recurrence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Family {
    /// Uniform on [-1, 1].
    Legendre,
    /// Standard normal.
    Hermite,
    /// Arcsine density `1 / (pi sqrt(1 - x^2))` on [-1, 1].
    Chebyshev1,
    /// Density proportional to `(1 - x)^a (1 + x)^b` on [-1, 1].
    Jacobi { a: f64, b: f64 },
    /// Coefficients obtained from a discretized density.
    Custom,
}

impl Family {
    /// Natural support, `None` when unbounded.
    pub fn bounds(&self) -> Option<(f64, f64)> {
        match self {
            Family::Hermite | Family::Custom => None,
            _ => Some((-1.0, 1.0)),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Family::Legendre => "legendre",
            Family::Hermite => "hermite",
            Family::Chebyshev1 => "chebyshev1",
            Family::Jacobi { .. } => "jacobi",
            Family::Custom => "custom",
        }
    }
}

impl std::str::FromStr for Family {
    type Err = QuadError;

    /// Accepts `legendre`, `uniform`, `hermite`, `normal`, `chebyshev1`,
    /// `arcsine` and `jacobi:a,b`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "legendre" | "uniform" => Ok(Family::Legendre),
            "hermite" | "normal" | "gaussian" => Ok(Family::Hermite),
            "chebyshev1" | "chebyshev" | "arcsine" => Ok(Family::Chebyshev1),
            "custom" => Ok(Family::Custom),
            _ => {
                if let Some(rest) = s.strip_prefix("jacobi:") {
                    let parts: Vec<&str> = rest.split(',').collect();
                    if parts.len() == 2 {
                        let a = parts[0].trim().parse::<f64>();
                        let b = parts[1].trim().parse::<f64>();
                        if let (Ok(a), Ok(b)) = (a, b) {
                            return Ok(Family::Jacobi { a, b });
                        }
                    }
                }
                Err(QuadError::UnsupportedFamily(s))
            }
        }
    }
}

/// Three-term recurrence coefficients of an orthonormal family:
/// `sqrt(b[k+1]) psi_{k+1} = (x - a[k]) psi_k - sqrt(b[k]) psi_{k-1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceTable {
    family: Family,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    #[serde(default)]
    bounds: Option<(f64, f64)>,
}

impl RecurrenceTable {
    /// Builds a table from raw coefficients, checking `beta > 0`.
    pub fn new(
        family: Family,
        alpha: Vec<f64>,
        beta: Vec<f64>,
        bounds: Option<(f64, f64)>,
    ) -> Result<Self> {
        if alpha.is_empty() {
            return Err(QuadError::invalid("recurrence table needs at least one coefficient"));
        }
        if alpha.len() != beta.len() {
            return Err(QuadError::DimensionMismatch {
                expected: alpha.len(),
                got: beta.len(),
            });
        }
        if let Some(k) = beta.iter().position(|b| !(*b > 0.0)) {
            return Err(QuadError::PositivityLoss {
                index: k,
                value: beta[k],
            });
        }
        Ok(Self {
            family,
            alpha,
            beta,
            bounds,
        })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    /// Number of `(alpha, beta)` pairs.
    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    pub fn bounds(&self) -> Option<(f64, f64)> {
        self.bounds
    }

    /// Evaluates `psi_0..=psi_degree` at `x` into `out`.
    pub(crate) fn eval_into(&self, degree: usize, x: f64, out: &mut [f64]) {
        let a = &self.alpha;
        let b = &self.beta;
        out[0] = 1.0 / b[0].sqrt();
        if degree == 0 {
            return;
        }
        out[1] = (x - a[0]) * out[0] / b[1].sqrt();
        for k in 1..degree {
            out[k + 1] = ((x - a[k]) * out[k] - b[k].sqrt() * out[k - 1]) / b[k + 1].sqrt();
        }
    }

    pub(crate) fn check_degree(&self, degree: usize) -> Result<()> {
        if degree + 1 > self.len() {
            return Err(QuadError::DegreeTooHigh {
                degree,
                needed: degree + 1,
                available: self.len(),
            });
        }
        Ok(())
    }
}

/// Closed-form recurrence coefficients for the built-in families.
pub fn recurrence_coefficients(family: Family, count: usize) -> Result<RecurrenceTable> {
    if count == 0 {
        return Err(QuadError::invalid("coefficient count must be at least 1"));
    }
    let (alpha, beta): (Vec<f64>, Vec<f64>) = match family {
        Family::Legendre => (0..count)
            .map(|k| {
                let k = k as f64;
                (0.0, if k == 0.0 { 1.0 } else { k * k / (4.0 * k * k - 1.0) })
            })
            .unzip(),
        Family::Hermite => (0..count)
            .map(|k| (0.0, if k == 0 { 1.0 } else { k as f64 }))
            .unzip(),
        Family::Chebyshev1 => (0..count)
            .map(|k| (0.0, [1.0, 0.5].get(k).copied().unwrap_or(0.25)))
            .unzip(),
        Family::Jacobi { a, b } => {
            if !(a > -1.0 && b > -1.0) {
                return Err(QuadError::invalid(format!(
                    "jacobi parameters must exceed -1, got a={a}, b={b}"
                )));
            }
            (0..count).map(|k| jacobi_pair(k, a, b)).unzip()
        }
        Family::Custom => {
            return Err(QuadError::UnsupportedFamily(
                "custom tables come from stieltjes_discretized".into(),
            ))
        }
    };
    RecurrenceTable::new(family, alpha, beta, family.bounds())
}

fn jacobi_pair(k: usize, a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let kf = k as f64;
    let alpha = if a == b {
        0.0
    } else if k == 0 {
        (b - a) / (s + 2.0)
    } else {
        (b * b - a * a) / ((2.0 * kf + s) * (2.0 * kf + s + 2.0))
    };
    let beta = match k {
        0 => 1.0,
        1 => 4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + s).powi(2) * (3.0 + s)),
        _ => {
            let t = 2.0 * kf + s;
            4.0 * kf * (kf + a) * (kf + b) * (kf + s) / (t * t * (t + 1.0) * (t - 1.0))
        }
    };
    (alpha, beta)
}

/// `psi_0..=psi_max_degree` at each point; row `i` belongs to `points[i]`.
pub fn evaluate_orthonormal(
    table: &RecurrenceTable,
    max_degree: usize,
    points: &[f64],
) -> Result<DMatrix<f64>> {
    table.check_degree(max_degree)?;
    let mut out = DMatrix::zeros(points.len(), max_degree + 1);
    let mut row = vec![0.0; max_degree + 1];
    for (i, &x) in points.iter().enumerate() {
        table.eval_into(max_degree, x, &mut row);
        for (j, v) in row.iter().enumerate() {
            out[(i, j)] = *v;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndexKind {
    /// `sum p_i <= k`
    TotalOrder,
    /// `max p_i <= k`
    TensorOrder,
    /// `prod (p_i + 1) <= k + 1`
    HyperbolicCross,
    /// `(sum p_i^q)^(1/q) <= k`
    HyperbolicQ,
}

impl std::str::FromStr for IndexKind {
    type Err = QuadError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "total_order" | "total" => Ok(IndexKind::TotalOrder),
            "tensor_order" | "tensor" => Ok(IndexKind::TensorOrder),
            "hyperbolic_cross" | "hyperbolic" => Ok(IndexKind::HyperbolicCross),
            "hyperbolic_q" => Ok(IndexKind::HyperbolicQ),
            other => Err(QuadError::invalid(format!("unknown index set kind '{other}'"))),
        }
    }
}

/// Ordered set of multi-indices, graded then lexicographic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiIndexSet {
    pub d: usize,
    pub kind: IndexKind,
    pub order_parameter: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    pub indices: Vec<Vec<usize>>,
}

impl MultiIndexSet {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Largest univariate degree in each direction.
    pub fn max_degrees(&self) -> Vec<usize> {
        let mut out = vec![0; self.d];
        for p in &self.indices {
            for (o, &v) in out.iter_mut().zip(p) {
                *o = (*o).max(v);
            }
        }
        out
    }

    pub fn position(&self, index: &[usize]) -> Option<usize> {
        self.indices.iter().position(|p| p.as_slice() == index)
    }

    /// Univariate basis `0..=degree` as a one-dimensional set.
    pub fn univariate(degree: usize) -> Self {
        Self {
            d: 1,
            kind: IndexKind::TotalOrder,
            order_parameter: degree,
            q: None,
            indices: (0..=degree).map(|j| vec![j]).collect(),
        }
    }
}

pub fn multi_index_set(kind: IndexKind, d: usize, k: usize, q: Option<f64>) -> Result<MultiIndexSet> {
    if d == 0 {
        return Err(QuadError::invalid("dimension must be at least 1"));
    }
    let cap = size_cap();
    let q = match kind {
        IndexKind::HyperbolicQ => {
            let q = q.ok_or_else(|| QuadError::invalid("hyperbolic_q needs q"))?;
            if !(q > 0.0 && q <= 1.0) {
                return Err(QuadError::invalid(format!("q must lie in (0, 1], got {q}")));
            }
            Some(q)
        }
        _ => None,
    };
    if kind == IndexKind::TensorOrder {
        let size = (k as u128 + 1).checked_pow(d as u32).unwrap_or(u128::MAX);
        if size > cap as u128 {
            return Err(QuadError::CapExceeded { size, cap });
        }
    }

    // per-coordinate cost, accumulated along a depth-first walk
    let kf = k as f64;
    let budget = match kind {
        IndexKind::TotalOrder | IndexKind::TensorOrder => kf,
        IndexKind::HyperbolicCross => ((k + 1) as f64).ln(),
        IndexKind::HyperbolicQ => kf.powf(q.unwrap()),
    };
    let cost = |p: usize| -> f64 {
        match kind {
            IndexKind::TotalOrder => p as f64,
            IndexKind::TensorOrder => 0.0,
            IndexKind::HyperbolicCross => ((p + 1) as f64).ln(),
            IndexKind::HyperbolicQ => (p as f64).powf(q.unwrap()),
        }
    };
    let slack = 1e-12 * budget.max(1.0);

    let mut indices = Vec::new();
    let mut current = vec![0usize; d];
    let mut overflow = None;
    fill(
        0,
        0.0,
        &mut current,
        k,
        &cost,
        budget + slack,
        cap,
        &mut indices,
        &mut overflow,
    );
    if let Some(size) = overflow {
        return Err(QuadError::CapExceeded { size, cap });
    }
    indices.sort_by(|a, b| {
        let sa: usize = a.iter().sum();
        let sb: usize = b.iter().sum();
        sa.cmp(&sb).then_with(|| a.cmp(b))
    });
    Ok(MultiIndexSet {
        d,
        kind,
        order_parameter: k,
        q,
        indices,
    })
}

#[allow(clippy::too_many_arguments)]
fn fill(
    dim: usize,
    used: f64,
    current: &mut Vec<usize>,
    k: usize,
    cost: &dyn Fn(usize) -> f64,
    budget: f64,
    cap: usize,
    out: &mut Vec<Vec<usize>>,
    overflow: &mut Option<u128>,
) {
    if overflow.is_some() {
        return;
    }
    if dim == current.len() {
        if out.len() == cap {
            *overflow = Some(cap as u128 + 1);
            return;
        }
        out.push(current.clone());
        return;
    }
    for p in 0..=k {
        let u = used + cost(p);
        if u > budget {
            break;
        }
        current[dim] = p;
        fill(dim + 1, u, current, k, cost, budget, cap, out, overflow);
    }
    current[dim] = 0;
}

/// Products `prod_i psi_{p_i}(z_i)`, one row per point, one column per index.
pub fn basis_matrix(
    basis: &MultiIndexSet,
    recurrences: &[RecurrenceTable],
    points: &[Vec<f64>],
) -> Result<DMatrix<f64>> {
    if recurrences.len() != basis.d {
        return Err(QuadError::DimensionMismatch {
            expected: basis.d,
            got: recurrences.len(),
        });
    }
    let maxdeg = basis.max_degrees();
    for (t, &deg) in recurrences.iter().zip(&maxdeg) {
        t.check_degree(deg)?;
    }
    let mut out = DMatrix::zeros(points.len(), basis.len());
    let mut uni: Vec<Vec<f64>> = maxdeg.iter().map(|&g| vec![0.0; g + 1]).collect();
    for (i, z) in points.iter().enumerate() {
        if z.len() != basis.d {
            return Err(QuadError::DimensionMismatch {
                expected: basis.d,
                got: z.len(),
            });
        }
        for (dim, buf) in uni.iter_mut().enumerate() {
            recurrences[dim].eval_into(maxdeg[dim], z[dim], buf);
        }
        for (j, p) in basis.indices.iter().enumerate() {
            out[(i, j)] = p.iter().enumerate().map(|(dim, &pd)| uni[dim][pd]).product();
        }
    }
    Ok(out)
}

/// The weighted design matrix together with the data that generated it.
///
/// Serialization stores points, weights, basis and recurrences; the entries
/// are rebuilt on load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "DesignSpec", try_from = "DesignSpec")]
pub struct DesignMatrix {
    entries: DMatrix<f64>,
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
    basis: MultiIndexSet,
    recurrences: Vec<RecurrenceTable>,
    renormalized: bool,
}

#[derive(Serialize, Deserialize)]
struct DesignSpec {
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
    basis: MultiIndexSet,
    recurrences: Vec<RecurrenceTable>,
    #[serde(default)]
    renormalized: bool,
}

impl From<DesignMatrix> for DesignSpec {
    fn from(a: DesignMatrix) -> Self {
        DesignSpec {
            points: a.points,
            weights: a.weights,
            basis: a.basis,
            recurrences: a.recurrences,
            renormalized: a.renormalized,
        }
    }
}

impl TryFrom<DesignSpec> for DesignMatrix {
    type Error = QuadError;

    fn try_from(s: DesignSpec) -> Result<Self> {
        let mut a = design_matrix(&s.basis, &s.recurrences, &s.points, &s.weights)?;
        a.renormalized |= s.renormalized;
        Ok(a)
    }
}

impl DesignMatrix {
    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn basis(&self) -> &MultiIndexSet {
        &self.basis
    }

    pub fn recurrences(&self) -> &[RecurrenceTable] {
        &self.recurrences
    }

    /// True when the caller's weights did not sum to one and were rescaled.
    pub fn renormalized(&self) -> bool {
        self.renormalized
    }

    /// Number of rows (candidate points).
    pub fn m(&self) -> usize {
        self.entries.nrows()
    }

    /// Number of columns (basis functions).
    pub fn n(&self) -> usize {
        self.entries.ncols()
    }

    /// The rows of `A` listed in `rows`, in that order.
    pub fn rows(&self, rows: &[usize]) -> Result<DMatrix<f64>> {
        let m = self.m();
        if let Some(&bad) = rows.iter().find(|&&r| r >= m) {
            return Err(QuadError::IndexOutOfRange { index: bad, rows: m });
        }
        Ok(self.entries.select_rows(rows))
    }

    /// FNV-1a fingerprint of points, weights and basis, as 16 hex digits.
    pub fn checksum(&self) -> String {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |v: u64| {
            for b in v.to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        };
        eat(self.m() as u64);
        eat(self.n() as u64);
        for p in &self.points {
            p.iter().for_each(|x| eat(x.to_bits()));
        }
        self.weights.iter().for_each(|w| eat(w.to_bits()));
        for p in &self.basis.indices {
            p.iter().for_each(|&v| eat(v as u64));
        }
        format!("{h:016x}")
    }

    /// Design matrix of the sub-rule on `rows` with its weights renormalized.
    pub fn restrict(&self, rows: &[usize]) -> Result<DesignMatrix> {
        let m = self.m();
        if let Some(&bad) = rows.iter().find(|&&r| r >= m) {
            return Err(QuadError::IndexOutOfRange { index: bad, rows: m });
        }
        let pts: Vec<Vec<f64>> = rows.iter().map(|&r| self.points[r].clone()).collect();
        let w: Vec<f64> = rows.iter().map(|&r| self.weights[r]).collect();
        let tau: f64 = w.iter().sum();
        let w: Vec<f64> = w.iter().map(|x| x / tau).collect();
        design_matrix(&self.basis, &self.recurrences, &pts, &w)
    }
}

pub fn design_matrix(
    basis: &MultiIndexSet,
    recurrences: &[RecurrenceTable],
    points: &[Vec<f64>],
    weights: &[f64],
) -> Result<DesignMatrix> {
    if points.len() != weights.len() {
        return Err(QuadError::DimensionMismatch {
            expected: points.len(),
            got: weights.len(),
        });
    }
    if let Some(i) = weights.iter().position(|w| !(*w > 0.0) || !w.is_finite()) {
        return Err(QuadError::NonPositiveWeight {
            index: i,
            value: weights[i],
        });
    }
    let total: f64 = weights.iter().sum();
    let renormalized = (total - 1.0).abs() > 1e-14;
    let weights: Vec<f64> = if renormalized {
        weights.iter().map(|w| w / total).collect()
    } else {
        weights.to_vec()
    };
    let mut entries = basis_matrix(basis, recurrences, points)?;
    for (i, w) in weights.iter().enumerate() {
        let s = w.sqrt();
        entries.row_mut(i).scale_mut(s);
    }
    Ok(DesignMatrix {
        entries,
        points: points.to_vec(),
        weights,
        basis: basis.clone(),
        recurrences: recurrences.to_vec(),
        renormalized,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    /// Composite 5-point Gauss-Legendre on [lo, hi] with `panels` panels,
    /// weights integrating dx.
    fn composite_gl(lo: f64, hi: f64, panels: usize) -> (Vec<f64>, Vec<f64>) {
        let r = (10.0f64 / 7.0).sqrt();
        let x1 = (5.0 - 2.0 * r).sqrt() / 3.0;
        let x2 = (5.0 + 2.0 * r).sqrt() / 3.0;
        let s70 = 70f64.sqrt();
        let w1 = (322.0 + 13.0 * s70) / 900.0;
        let w2 = (322.0 - 13.0 * s70) / 900.0;
        let nodes = [-x2, -x1, 0.0, x1, x2];
        let wts = [w2, w1, 128.0 / 225.0, w1, w2];
        let h = (hi - lo) / panels as f64;
        let mut xs = Vec::with_capacity(5 * panels);
        let mut ws = Vec::with_capacity(5 * panels);
        for p in 0..panels {
            let c = lo + (p as f64 + 0.5) * h;
            for (t, w) in nodes.iter().zip(&wts) {
                xs.push(c + 0.5 * h * t);
                ws.push(0.5 * h * w);
            }
        }
        (xs, ws)
    }

    /// Monic Stieltjes on a discrete measure, written independently of the
    /// library's orthonormal version.
    fn monic_stieltjes(x: &[f64], w: &[f64], k: usize) -> (Vec<f64>, Vec<f64>) {
        let mass: f64 = w.iter().sum();
        let w: Vec<f64> = w.iter().map(|v| v / mass).collect();
        let mut p_prev = vec![0.0; x.len()];
        let mut p = vec![1.0; x.len()];
        let mut alpha = vec![];
        let mut beta = vec![1.0];
        let mut norm_prev = 1.0;
        for j in 0..k {
            let norm: f64 = p.iter().zip(&w).map(|(p, w)| p * p * w).sum();
            if j > 0 {
                beta.push(norm / norm_prev);
            }
            let a: f64 = p.iter().zip(&w).zip(x).map(|((p, w), x)| x * p * p * w).sum::<f64>() / norm;
            alpha.push(a);
            let b = *beta.last().unwrap();
            let next: Vec<f64> = (0..x.len())
                .map(|i| (x[i] - a) * p[i] - if j > 0 { b * p_prev[i] } else { 0.0 })
                .collect();
            p_prev = std::mem::replace(&mut p, next);
            norm_prev = norm;
        }
        (alpha, beta)
    }

    #[test]
    fn legendre_closed_form() {
        let t = recurrence_coefficients(Family::Legendre, 3).unwrap();
        assert_eq!(t.alpha(), &[0.0, 0.0, 0.0]);
        assert_relative_eq!(t.beta()[0], 1.0);
        assert_relative_eq!(t.beta()[1], 1.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(t.beta()[2], 4.0 / 15.0, epsilon = 1e-15);
    }

    #[test]
    fn legendre_against_stieltjes_oracle() {
        let (x, w) = composite_gl(-1.0, 1.0, 2000);
        let (a, b) = monic_stieltjes(&x, &w, 8);
        let t = recurrence_coefficients(Family::Legendre, 8).unwrap();
        for k in 0..8 {
            assert!(a[k].abs() < 1e-12);
            assert_relative_eq!(b[k], t.beta()[k], epsilon = 1e-12);
        }
    }

    #[test]
    fn hermite_against_stieltjes_oracle() {
        let (x, w) = composite_gl(-12.0, 12.0, 2000);
        let c = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
        let w: Vec<f64> = x.iter().zip(&w).map(|(x, w)| w * c * (-0.5 * x * x).exp()).collect();
        let (_, b) = monic_stieltjes(&x, &w, 4);
        assert_eq!(b.len(), 4);
        for (k, expect) in [1.0, 1.0, 2.0, 3.0].iter().enumerate() {
            assert_relative_eq!(b[k], *expect, epsilon = 1e-10);
        }
        let t = recurrence_coefficients(Family::Hermite, 4).unwrap();
        assert_eq!(t.beta(), &[1.0, 1.0, 2.0, 3.0]);
    }

    #[test]
    fn jacobi_reduces_to_legendre_and_chebyshev() {
        let leg = recurrence_coefficients(Family::Legendre, 10).unwrap();
        let j00 = recurrence_coefficients(Family::Jacobi { a: 0.0, b: 0.0 }, 10).unwrap();
        let cheb = recurrence_coefficients(Family::Chebyshev1, 10).unwrap();
        let jhh = recurrence_coefficients(Family::Jacobi { a: -0.5, b: -0.5 }, 10).unwrap();
        for k in 0..10 {
            assert_relative_eq!(leg.beta()[k], j00.beta()[k], epsilon = 1e-15);
            assert_relative_eq!(cheb.beta()[k], jhh.beta()[k], epsilon = 1e-15);
        }
    }

    #[test]
    fn jacobi_against_stieltjes_oracle() {
        // (1 - x)^2 (1 + x) is smooth enough for the composite rule
        let (x, w) = composite_gl(-1.0, 1.0, 400);
        let w: Vec<f64> = x.iter().zip(&w).map(|(x, w)| w * (1.0 - x).powi(2) * (1.0 + x)).collect();
        let (a, b) = monic_stieltjes(&x, &w, 6);
        let t = recurrence_coefficients(Family::Jacobi { a: 2.0, b: 1.0 }, 6).unwrap();
        for k in 0..6 {
            assert_relative_eq!(a[k], t.alpha()[k], epsilon = 1e-12);
            assert_relative_eq!(b[k], t.beta()[k], epsilon = 1e-12);
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(recurrence_coefficients(Family::Legendre, 0).is_err());
        assert!(matches!(
            recurrence_coefficients(Family::Custom, 3),
            Err(QuadError::UnsupportedFamily(_))
        ));
        assert!(recurrence_coefficients(Family::Jacobi { a: -1.0, b: 0.0 }, 3).is_err());
        let t = recurrence_coefficients(Family::Legendre, 3).unwrap();
        assert!(matches!(
            evaluate_orthonormal(&t, 3, &[0.0]),
            Err(QuadError::DegreeTooHigh { .. })
        ));
    }

    #[test]
    fn low_degree_values() {
        let t = recurrence_coefficients(Family::Legendre, 5).unwrap();
        let v = evaluate_orthonormal(&t, 0, &[-0.7, 0.1, 0.9]).unwrap();
        assert!(v.iter().all(|x| *x == 1.0));
        let v = evaluate_orthonormal(&t, 1, &[0.5]).unwrap();
        assert_relative_eq!(v[(0, 1)], 3f64.sqrt() * 0.5, epsilon = 1e-15);
    }

    #[test]
    fn five_point_gauss_gram_is_identity() {
        let (x, w) = composite_gl(-1.0, 1.0, 1);
        let w: Vec<f64> = w.iter().map(|v| v / 2.0).collect();
        let t = recurrence_coefficients(Family::Legendre, 5).unwrap();
        let basis = MultiIndexSet::univariate(4);
        let pts: Vec<Vec<f64>> = x.iter().map(|&v| vec![v]).collect();
        let a = design_matrix(&basis, &[t], &pts, &w).unwrap();
        let g = a.entries().transpose() * a.entries();
        assert!((g - DMatrix::<f64>::identity(5, 5)).abs().max() < 1e-12);
    }

    #[test]
    fn family_parsing_and_serde() {
        assert_eq!("uniform".parse::<Family>().unwrap(), Family::Legendre);
        assert_eq!(
            "jacobi:0.5,-0.25".parse::<Family>().unwrap(),
            Family::Jacobi { a: 0.5, b: -0.25 }
        );
        assert!("laguerre".parse::<Family>().is_err());
        let t = recurrence_coefficients(Family::Jacobi { a: 1.0, b: 2.0 }, 4).unwrap();
        let s = serde_json::to_string(&t).unwrap();
        assert!(s.contains("\"kind\":\"jacobi\""));
        let back: RecurrenceTable = serde_json::from_str(&s).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn index_set_examples() {
        let t = multi_index_set(IndexKind::TotalOrder, 2, 3, None).unwrap();
        assert_eq!(t.len(), 10);
        assert_eq!(t.indices[0], vec![0, 0]);
        assert_eq!(t.indices[1], vec![0, 1]);
        assert_eq!(t.indices[2], vec![1, 0]);
        assert_eq!(t.indices[9], vec![3, 0]);
        assert_eq!(multi_index_set(IndexKind::TensorOrder, 2, 3, None).unwrap().len(), 16);
        assert!(multi_index_set(IndexKind::HyperbolicQ, 2, 3, Some(1.5)).is_err());
        assert!(multi_index_set(IndexKind::HyperbolicQ, 2, 3, None).is_err());
    }

    fn brute_force(d: usize, k: usize, keep: impl Fn(&[usize]) -> bool) -> usize {
        let total = (k + 1).pow(d as u32);
        (0..total)
            .filter(|&code| {
                let mut c = code;
                let p: Vec<usize> = (0..d)
                    .map(|_| {
                        let v = c % (k + 1);
                        c /= k + 1;
                        v
                    })
                    .collect();
                keep(&p)
            })
            .count()
    }

    #[test]
    fn hyperbolic_sets_match_enumeration() {
        for d in 1..=4 {
            for k in 0..=6 {
                let hc = multi_index_set(IndexKind::HyperbolicCross, d, k, None).unwrap();
                let bf = brute_force(d, k, |p| p.iter().map(|v| v + 1).product::<usize>() <= k + 1);
                assert_eq!(hc.len(), bf, "d={d} k={k}");
                for q in [0.4, 0.75, 1.0] {
                    let hq = multi_index_set(IndexKind::HyperbolicQ, d, k, Some(q)).unwrap();
                    let bf = brute_force(d, k, |p| {
                        p.iter().map(|&v| (v as f64).powf(q)).sum::<f64>().powf(1.0 / q)
                            <= k as f64 + 1e-12
                    });
                    assert_eq!(hq.len(), bf, "d={d} k={k} q={q}");
                }
            }
        }
    }

    #[test]
    fn closed_form_cardinalities() {
        fn binom(n: usize, k: usize) -> usize {
            (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
        }
        for d in 1..=6 {
            for k in 0..=10 {
                let t = multi_index_set(IndexKind::TotalOrder, d, k, None).unwrap();
                assert_eq!(t.len(), binom(d + k, d));
                let s = multi_index_set(IndexKind::TensorOrder, d, k, None).unwrap();
                assert_eq!(s.len(), (k + 1).pow(d as u32));
            }
        }
    }

    #[test]
    fn design_matrix_basics() {
        let t = recurrence_coefficients(Family::Legendre, 2).unwrap();
        let basis = MultiIndexSet::univariate(0);
        let a = design_matrix(&basis, std::slice::from_ref(&t), &[vec![0.3]], &[1.0]).unwrap();
        assert_eq!(a.entries().as_slice(), &[1.0]);
        assert!(!a.renormalized());

        let b = design_matrix(&basis, std::slice::from_ref(&t), &[vec![0.3], vec![0.1]], &[2.0, 2.0]).unwrap();
        assert!(b.renormalized());
        assert_eq!(b.weights(), &[0.5, 0.5]);

        assert!(matches!(
            design_matrix(&basis, std::slice::from_ref(&t), &[vec![0.3]], &[0.0]),
            Err(QuadError::NonPositiveWeight { .. })
        ));
        assert!(matches!(
            design_matrix(&basis, &[t], &[vec![0.3, 0.1]], &[1.0]),
            Err(QuadError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn design_matrix_serde_recomputes_entries() {
        let t = recurrence_coefficients(Family::Legendre, 4).unwrap();
        let basis = multi_index_set(IndexKind::TotalOrder, 2, 2, None).unwrap();
        let pts = vec![vec![0.1, -0.2], vec![0.5, 0.7], vec![-0.9, 0.3]];
        let a = design_matrix(&basis, &[t.clone(), t], &pts, &[0.2, 0.3, 0.5]).unwrap();
        let s = serde_json::to_string(&a).unwrap();
        assert!(!s.contains("entries"));
        let back: DesignMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(back, a);
    }

    /// Orthonormal polynomials from monomial moments via Cholesky of the
    /// Hankel matrix; returns coefficient rows (lower triangular).
    fn monomial_oracle(moments: &[f64], deg: usize) -> DMatrix<f64> {
        let h = DMatrix::from_fn(deg + 1, deg + 1, |i, j| moments[i + j]);
        let l = h.cholesky().unwrap().l();
        l.try_inverse().unwrap()
    }

    fn moments_for(family: Family, count: usize) -> Vec<f64> {
        (0..count)
            .map(|j| {
                if j % 2 == 1 {
                    return 0.0;
                }
                match family {
                    Family::Legendre => 1.0 / (j as f64 + 1.0),
                    Family::Hermite => (1..j).step_by(2).map(|v| v as f64).product(),
                    Family::Chebyshev1 => {
                        let h = j / 2;
                        (0..h).fold(1.0, |acc, i| acc * (j - i) as f64 / (i + 1) as f64) / 2f64.powi(j as i32)
                    }
                    _ => unreachable!(),
                }
            })
            .collect()
    }

    proptest! {
        #[test]
        fn recurrence_matches_monomial_orthogonalization(
            fam in prop_oneof![Just(Family::Legendre), Just(Family::Hermite), Just(Family::Chebyshev1)],
            xs in proptest::collection::vec(-1.0f64..1.0, 100),
        ) {
            let deg = 6;
            let coef = monomial_oracle(&moments_for(fam, 2 * deg + 1), deg);
            let t = recurrence_coefficients(fam, deg + 1).unwrap();
            let scale = if fam == Family::Hermite { 3.0 } else { 1.0 };
            let pts: Vec<f64> = xs.iter().map(|x| x * scale).collect();
            let v = evaluate_orthonormal(&t, deg, &pts).unwrap();
            for (i, &x) in pts.iter().enumerate() {
                for j in 0..=deg {
                    let direct: f64 = (0..=j).map(|c| coef[(j, c)] * x.powi(c as i32)).sum();
                    // the oracle fixes the sign by a positive leading coefficient, as does the recurrence
                    prop_assert!((direct - v[(i, j)]).abs() < 1e-9, "{:?} j={} x={}", fam, j, x);
                }
            }
        }

        #[test]
        fn design_matrix_is_pure(
            pts in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..20),
        ) {
            let t = recurrence_coefficients(Family::Legendre, 5).unwrap();
            let basis = multi_index_set(IndexKind::TotalOrder, 2, 4, None).unwrap();
            let p: Vec<Vec<f64>> = pts.iter().map(|(a, b)| vec![*a, *b]).collect();
            let w = vec![1.0 / p.len() as f64; p.len()];
            let a = design_matrix(&basis, &[t.clone(), t.clone()], &p, &w).unwrap();
            let b = design_matrix(&basis, &[t.clone(), t], &p, &w).unwrap();
            prop_assert_eq!(
                a.entries().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                b.entries().iter().map(|v| v.to_bits()).collect::<Vec<_>>()
            );
        }

        #[test]
        fn index_sets_are_sorted_and_unique(
            d in 1usize..5, k in 0usize..6,
            kind in prop_oneof![
                Just(IndexKind::TotalOrder), Just(IndexKind::TensorOrder),
                Just(IndexKind::HyperbolicCross), Just(IndexKind::HyperbolicQ)
            ],
        ) {
            let s = multi_index_set(kind, d, k, Some(0.5)).unwrap();
            for w in s.indices.windows(2) {
                let (a, b) = (&w[0], &w[1]);
                let key = |p: &Vec<usize>| (p.iter().sum::<usize>(), p.clone());
                prop_assert!(key(a) < key(b));
            }
        }
    }
}
