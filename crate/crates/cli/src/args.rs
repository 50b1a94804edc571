use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use quadkit_core::{Family, Growth, IndexKind, Strategy};

use crate::experiments::ExperimentName;
use crate::io::Format;

#[derive(Debug, Parser)]
#[command(name = "quadkit", version, about = "Quadrature rules, least-squares designs and optimal subsampling")]
pub struct Cli {
    /// Base seed for random draws
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Output file (experiments: output directory); stdout when omitted
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Output format; defaults to the --out extension, then to the command's usual format
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Univariate rule, or its tensor power with --d
    Rule(RuleArgs),
    /// Smolyak sparse grid
    Sparse(SparseArgs),
    /// Monte Carlo or Christoffel samples
    Sample(SampleArgs),
    /// Weighted design matrix from a points file
    Design(DesignArgs),
    /// Choose k rows of a design matrix
    Subselect(SubselectArgs),
    /// Least-squares polynomial coefficients
    Lsq(LsqArgs),
    /// Gram matrix and exactness frontier
    Gram(GramArgs),
    /// Run a named experiment into an output directory
    Experiment(ExperimentArgs),
    /// Recheck a selection against its design
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RuleKind {
    Gauss,
    Lobatto,
    ClenshawCurtis,
}

#[derive(Debug, Args)]
pub struct RuleArgs {
    #[arg(long, value_enum, default_value = "gauss")]
    pub kind: RuleKind,
    /// legendre, hermite, chebyshev1 or jacobi:a,b
    #[arg(long, default_value = "legendre")]
    pub family: Family,
    /// Points per dimension
    #[arg(long)]
    pub m: usize,
    #[arg(long, default_value_t = 1)]
    pub d: usize,
}

#[derive(Debug, Args)]
pub struct SparseArgs {
    #[arg(long)]
    pub d: usize,
    #[arg(long)]
    pub level: usize,
    /// linear or exponential
    #[arg(long, default_value = "linear")]
    pub growth: Growth,
    #[arg(long, default_value = "legendre")]
    pub family: Family,
    /// Keep coincident points from different tensor terms
    #[arg(long)]
    pub unmerged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SampleKind {
    MonteCarlo,
    Christoffel,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long, value_enum, default_value = "monte-carlo")]
    pub strategy: SampleKind,
    #[arg(long)]
    pub d: usize,
    #[arg(long)]
    pub m: usize,
    #[arg(long, default_value = "legendre")]
    pub family: Family,
    /// Stream of the generator, for independent trials under one seed
    #[arg(long, default_value_t = 0)]
    pub stream: u64,
    /// Append Christoffel weights for a basis of this order
    #[arg(long)]
    pub order: Option<usize>,
    #[arg(long, default_value = "total")]
    pub basis: IndexKind,
}

#[derive(Debug, Args)]
pub struct DesignArgs {
    /// CSV with columns x1..xd and optional w
    #[arg(long)]
    pub points: PathBuf,
    #[arg(long, default_value = "legendre")]
    pub family: Family,
    /// total, tensor, hyperbolic or hyperbolic_q
    #[arg(long, default_value = "total")]
    pub basis: IndexKind,
    #[arg(long)]
    pub order: usize,
    /// Exponent for hyperbolic_q
    #[arg(long)]
    pub q: Option<f64>,
    /// Replace the weights by normalized reciprocal Christoffel values
    #[arg(long)]
    pub christoffel_weights: bool,
}

#[derive(Debug, Args)]
pub struct SubselectArgs {
    /// qr, lu, svd, newton or greedy
    #[arg(long)]
    pub strategy: Strategy,
    #[arg(long)]
    pub k: usize,
    /// design.json
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Newton regularization
    #[arg(long, default_value_t = 1e-2)]
    pub lambda: f64,
    /// Newton: round only, without the exchange pass
    #[arg(long)]
    pub no_swap_refinement: bool,
    /// Greedy starting rows, comma separated
    #[arg(long, value_delimiter = ',')]
    pub seed_rows: Option<Vec<usize>>,
}

#[derive(Debug, Args)]
pub struct LsqArgs {
    /// design.json
    #[arg(long = "in")]
    pub input: PathBuf,
    /// CSV of model values at the design points (column f, or the first column)
    #[arg(long)]
    pub values: PathBuf,
}

#[derive(Debug, Args)]
pub struct GramArgs {
    /// design.json
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Restrict to the rows of this selection.json
    #[arg(long)]
    pub selection: Option<PathBuf>,
    #[arg(long, default_value_t = quadkit_core::DEFAULT_GRAM_TOL)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(value_enum)]
    pub name: ExperimentName,
    /// Parameter overrides as inline JSON or a path to a JSON file
    #[arg(long)]
    pub params: Option<String>,
    /// Number of random trials (default 10)
    #[arg(long)]
    pub trials: Option<usize>,
    /// Explicit trial seeds, comma separated
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    /// Write column descriptions for each output file
    #[arg(long)]
    pub emit_gnuplot_hints: bool,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub selection: PathBuf,
    #[arg(long)]
    pub design: PathBuf,
    #[arg(long, default_value_t = quadkit_core::DEFAULT_GRAM_TOL)]
    pub tol: f64,
}
