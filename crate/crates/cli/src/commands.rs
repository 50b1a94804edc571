//! One function per non-experiment subcommand.

use std::path::Path;

use anyhow::{bail, Context, Result};
use quadkit_core::{
    christoffel_sample_for, clenshaw_curtis, condition_number, design_matrix, gauss_lobatto, golub_welsch, gram_report,
    moments, monte_carlo_sample, multi_index_set, nnls_weights, recurrence_coefficients, sample_weights,
    solve_least_squares, sparse_grid, subselect, tensor_grid, weighted_rhs, DesignMatrix, Family, GramReport,
    MultiIndexSet, NewtonOptions, QuadError, QuadratureRule, RecurrenceTable, Seed, Selection, SparseGridSpec,
    SubselectOptions,
};
use serde::Serialize;

use crate::args::*;
use crate::io::{self, emit, emit_table, json_bytes, num, points_table, Format, Table};

/// Where and how a command writes its result.
pub struct Sink<'a> {
    pub out: Option<&'a Path>,
    pub format: Option<Format>,
}

impl Sink<'_> {
    fn format(&self, fallback: Format) -> Format {
        Format::resolve(self.format, self.out, fallback)
    }

    fn rule(&self, rule: &QuadratureRule) -> Result<()> {
        match self.format(Format::Csv) {
            Format::Csv => emit(self.out, &points_table(&rule.points, Some(&rule.weights)).to_csv()?),
            Format::Json => emit(self.out, &json_bytes(rule)?),
        }
    }

    fn json<T: Serialize>(&self, value: &T, csv: impl FnOnce() -> Table) -> Result<()> {
        match self.format(Format::Json) {
            Format::Json => emit(self.out, &json_bytes(value)?),
            Format::Csv => emit_table(self.out, Format::Csv, &csv()),
        }
    }
}

pub fn tables(family: Family, d: usize, count: usize) -> Result<Vec<RecurrenceTable>> {
    Ok(vec![recurrence_coefficients(family, count)?; d])
}

pub fn build_rule(kind: RuleKind, family: Family, m: usize) -> Result<QuadratureRule> {
    Ok(match kind {
        RuleKind::Gauss => golub_welsch(&recurrence_coefficients(family, m + 1)?, m)?,
        RuleKind::Lobatto => gauss_lobatto(&recurrence_coefficients(family, m + 1)?, m)?,
        RuleKind::ClenshawCurtis => {
            if family != Family::Legendre {
                bail!("clenshaw-curtis weights are for the uniform density only");
            }
            clenshaw_curtis(m)?
        }
    })
}

pub fn rule(args: &RuleArgs, sink: &Sink) -> Result<()> {
    let r = build_rule(args.kind, args.family, args.m)?;
    let r = if args.d > 1 { tensor_grid(&vec![r; args.d])? } else { r };
    sink.rule(&r)
}

pub fn sparse(args: &SparseArgs, sink: &Sink) -> Result<()> {
    let mut spec = SparseGridSpec::new(args.d, args.level, args.growth);
    spec.merged = !args.unmerged;
    let r = sparse_grid(&spec, &tables(args.family, args.d, spec.max_points())?)?;
    if r.has_negative_weights {
        eprintln!("note: sparse grid has negative weights");
    }
    sink.rule(&r)
}

pub fn sample(args: &SampleArgs, seed: u64, sink: &Sink) -> Result<()> {
    let seed = Seed::new(seed, args.stream);
    let density = vec![args.family; args.d];
    let set = match args.strategy {
        SampleKind::MonteCarlo => monte_carlo_sample(&density, args.m, seed)?,
        SampleKind::Christoffel => christoffel_sample_for(&density, args.m, seed)?,
    };
    let weights = match args.order {
        Some(k) => {
            let basis = multi_index_set(args.basis, args.d, k, None)?;
            Some(sample_weights(&set.points, &basis, &tables(args.family, args.d, k + 1)?)?)
        }
        None => None,
    };
    match sink.format(Format::Csv) {
        Format::Csv => emit(sink.out, &points_table(&set.points, weights.as_deref()).to_csv()?),
        Format::Json => {
            #[derive(Serialize)]
            struct Out<'a> {
                #[serde(flatten)]
                set: &'a quadkit_core::SampleSet,
                #[serde(skip_serializing_if = "Option::is_none")]
                weights: Option<Vec<f64>>,
            }
            emit(sink.out, &json_bytes(&Out { set: &set, weights })?)
        }
    }
}

pub fn design(args: &DesignArgs, sink: &Sink) -> Result<()> {
    let (points, weights) = io::read_points(&args.points)?;
    let d = points[0].len();
    let basis = multi_index_set(args.basis, d, args.order, args.q)?;
    let tabs = tables(args.family, d, args.order + 1)?;
    let weights = if args.christoffel_weights {
        sample_weights(&points, &basis, &tabs)?
    } else {
        weights.unwrap_or_else(|| vec![1.0 / points.len() as f64; points.len()])
    };
    let a = design_matrix(&basis, &tabs, &points, &weights)?;
    if a.renormalized() {
        eprintln!("note: weights renormalized to sum to one");
    }
    sink.json(&a, || matrix_table(&a))
}

fn matrix_table(a: &DesignMatrix) -> Table {
    let header: Vec<String> = (0..a.n()).map(|j| format!("psi{j}")).collect();
    let mut t = Table::new(&header);
    for row in a.entries().row_iter() {
        t.push(row.iter().map(|v| num(*v)).collect());
    }
    t
}

pub fn load_design(path: &Path) -> Result<DesignMatrix> {
    io::read_json(path)
}

pub fn selection_table(a: &DesignMatrix, sel: &Selection) -> Table {
    let d = a.points()[0].len();
    let mut header = vec!["row".to_string()];
    header.extend(io::coord_header(d));
    header.push("w".into());
    let mut t = Table::new(&header);
    for (i, &r) in sel.row_indices.iter().enumerate() {
        let mut row = vec![r.to_string()];
        row.extend(a.points()[r].iter().map(|v| num(*v)));
        row.push(num(sel.renormalized_weights[i]));
        t.push(row);
    }
    t
}

pub fn subselect_cmd(args: &SubselectArgs, sink: &Sink) -> Result<()> {
    let a = load_design(&args.input)?;
    let opts = SubselectOptions {
        newton: NewtonOptions {
            lambda: args.lambda,
            swap_refinement: !args.no_swap_refinement,
            ..NewtonOptions::default()
        },
        seed_rows: args.seed_rows.clone(),
    };
    let sel = subselect(&a, args.k, args.strategy, &opts)?;
    sink.json(&sel, || selection_table(&a, &sel))
}

#[derive(Debug, Serialize)]
pub struct LsqOutput {
    pub basis: Vec<Vec<usize>>,
    pub coefficients: Vec<f64>,
    pub residual_norm: f64,
    pub mean: f64,
    pub variance: f64,
}

pub fn lsq(args: &LsqArgs, sink: &Sink) -> Result<()> {
    let a = load_design(&args.input)?;
    let f = io::read_values(&args.values)?;
    let b = weighted_rhs(&a, &f)?;
    let ls = solve_least_squares(&a, &b)?;
    let (mean, variance) = moments(&ls.x, a.basis())?;
    let out = LsqOutput {
        basis: a.basis().indices.clone(),
        coefficients: ls.x,
        residual_norm: ls.residual_norm,
        mean,
        variance,
    };
    eprintln!("mean {} variance {} residual {}", num(mean), num(variance), num(out.residual_norm));
    sink.json(&out, || coefficient_table(a.basis(), &out.coefficients))
}

pub fn coefficient_table(basis: &MultiIndexSet, x: &[f64]) -> Table {
    let mut header: Vec<String> = (1..=basis.d).map(|i| format!("p{i}")).collect();
    header.push("value".into());
    let mut t = Table::new(&header);
    for (idx, v) in basis.indices.iter().zip(x) {
        let mut row: Vec<String> = idx.iter().map(|p| p.to_string()).collect();
        row.push(num(*v));
        t.push(row);
    }
    t
}

pub fn gram_table(g: &GramReport) -> Table {
    let mut t = Table::new(&["p", "q", "value", "pass"]);
    for (p, row) in g.gram.iter().enumerate() {
        for (q, v) in row.iter().enumerate() {
            t.push(vec![
                p.to_string(),
                q.to_string(),
                num(*v),
                (g.exactness_frontier[p][q] as u8).to_string(),
            ]);
        }
    }
    t
}

fn load_selection(path: &Path) -> Result<Selection> {
    io::read_json(path)
}

pub fn gram(args: &GramArgs, sink: &Sink) -> Result<()> {
    let a = load_design(&args.input)?;
    let a = match &args.selection {
        Some(p) => {
            let sel = load_selection(p)?;
            check_selection(&a, &sel)?;
            a.restrict(&sel.row_indices)?
        }
        None => a,
    };
    let g = gram_report(&a, args.tol);
    eprintln!(
        "kappa(A) {} max off-diagonal error {} failures {}",
        num(condition_number(a.entries())),
        num(g.max_offdiag_error),
        g.failures().len()
    );
    sink.json(&g, || gram_table(&g))
}

/// Index range first, then the design fingerprint.
pub fn check_selection(a: &DesignMatrix, sel: &Selection) -> Result<()> {
    if let Some(&bad) = sel.row_indices.iter().find(|&&r| r >= a.m()) {
        return Err(QuadError::IndexOutOfRange { index: bad, rows: a.m() }.into());
    }
    let sum = a.checksum();
    if sel.design_checksum != sum {
        bail!(
            "checksum mismatch: selection refers to design {}, file has {}",
            sel.design_checksum,
            sum
        );
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Recheck {
    pub stored: Option<f64>,
    pub recomputed: Option<f64>,
    pub abs_diff: Option<f64>,
}

impl Recheck {
    fn new(stored: Option<f64>, recomputed: Option<f64>) -> Self {
        let abs_diff = stored.zip(recomputed).map(|(a, b)| (a - b).abs());
        Self {
            stored,
            recomputed,
            abs_diff,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Frontier {
    pub max_offdiag_error: f64,
    pub failures: Vec<(usize, usize)>,
    /// Basis multi-indices appearing in at least one failing entry.
    pub failing_indices: Vec<Vec<usize>>,
}

impl Frontier {
    fn of(g: &GramReport, basis: &MultiIndexSet) -> Self {
        let failures = g.failures();
        let mut involved: Vec<usize> = failures.iter().flat_map(|&(p, q)| [p, q]).collect();
        involved.sort_unstable();
        involved.dedup();
        Self {
            max_offdiag_error: g.max_offdiag_error,
            failing_indices: involved.iter().map(|&j| basis.indices[j].clone()).collect(),
            failures,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub strategy: String,
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub design_checksum: String,
    pub condition_number: Recheck,
    pub log_det: Recheck,
    /// Frontier of the selected rows with their renormalized design weights.
    pub frontier: Frontier,
    /// Frontier with nonnegative moment-matched weights on the selected points.
    pub moment_matched: Option<MomentMatched>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentMatched {
    pub residual_norm: f64,
    pub exact: bool,
    pub frontier: Option<Frontier>,
}

pub fn validate_selection(a: &DesignMatrix, sel: &Selection, tol: f64) -> Result<ValidationReport> {
    check_selection(a, sel)?;
    let (log_det, kappa) = quadkit_core::subselect::evaluate_rows(a.entries(), &sel.row_indices);
    let restricted = a.restrict(&sel.row_indices)?;
    let frontier = Frontier::of(&gram_report(&restricted, tol), a.basis());

    let pts: Vec<Vec<f64>> = sel.row_indices.iter().map(|&r| a.points()[r].clone()).collect();
    let moment_matched = a.basis().position(&vec![0; a.basis().d]).map(|zero| -> Result<MomentMatched> {
        let mut e = vec![0.0; a.n()];
        e[zero] = 1.0;
        let r = nnls_weights(&pts, a.basis(), a.recurrences(), &e)?;
        // zero weights drop points; the frontier is only defined on positive ones
        let keep: Vec<usize> = (0..pts.len()).filter(|&i| r.weights[i] > 0.0).collect();
        let frontier = if keep.is_empty() {
            None
        } else {
            let p: Vec<Vec<f64>> = keep.iter().map(|&i| pts[i].clone()).collect();
            let w: Vec<f64> = keep.iter().map(|&i| r.weights[i]).collect();
            let b = design_matrix(a.basis(), a.recurrences(), &p, &w)?;
            Some(Frontier::of(&gram_report(&b, tol), a.basis()))
        };
        Ok(MomentMatched {
            residual_norm: r.residual_norm,
            exact: r.exact,
            frontier,
        })
    });
    Ok(ValidationReport {
        strategy: sel.objective_report.strategy.name().to_string(),
        m: a.m(),
        n: a.n(),
        k: sel.k(),
        design_checksum: a.checksum(),
        condition_number: Recheck::new(sel.objective_report.condition_number, kappa),
        log_det: Recheck::new(sel.objective_report.log_det, log_det),
        frontier,
        moment_matched: moment_matched.transpose()?,
    })
}

pub fn validate(args: &ValidateArgs, sink: &Sink) -> Result<()> {
    let a = load_design(&args.design)?;
    let sel = load_selection(&args.selection).context("loading selection")?;
    let report = validate_selection(&a, &sel, args.tol)?;
    sink.json(&report, || {
        let mut t = Table::new(&["quantity", "stored", "recomputed"]);
        let opt = |v: Option<f64>| v.map_or_else(|| "NaN".to_string(), num);
        t.push(vec![
            "condition_number".into(),
            opt(report.condition_number.stored),
            opt(report.condition_number.recomputed),
        ]);
        t.push(vec!["log_det".into(), opt(report.log_det.stored), opt(report.log_det.recomputed)]);
        t
    })
}
