//! Quadrature rules, orthonormal polynomial bases and optimal row subsets of
//! weighted design matrices.
//!
//! The usual flow: build a [`RecurrenceTable`] per dimension, make a rule
//! ([`golub_welsch`], [`sparse_grid`], ...) or a [`SampleSet`], assemble a
//! [`DesignMatrix`] over a [`MultiIndexSet`], then shrink it with one of the
//! [`subselect`] strategies and check the result with [`gram_report`].

// `!(x > 0.0)` is deliberate throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod linalg;
pub mod orthopoly;
pub mod quadrature;
pub mod sampling;
pub mod subselect;

pub use diagnostics::{
    condition_number, gram_report, gram_report_of, moments, solve_least_squares, weighted_rhs, GramReport,
    LeastSquares, DEFAULT_GRAM_TOL,
};
pub use error::{QuadError, Result};
pub use orthopoly::{
    basis_matrix, design_matrix, evaluate_orthonormal, multi_index_set, recurrence_coefficients, size_cap,
    DesignMatrix, Family, IndexKind, MultiIndexSet, RecurrenceTable, DEFAULT_SIZE_CAP,
};
pub use quadrature::{
    clenshaw_curtis, gauss_lobatto, golub_welsch, padua_points, pseudospectral_coefficients, sparse_grid,
    stieltjes_discretized, tensor_grid, Growth, Provenance, QuadratureRule, SparseGridSpec,
};
pub use sampling::{
    christoffel_sample, christoffel_sample_for, monte_carlo_sample, sample_weights, SampleSet, SampleStrategy, Seed,
    RNG_ALGORITHM,
};
pub use subselect::{
    greedy_det_subselect, lu_subselect, newton_subselect, nnls, nnls_weights, pivoting_constant, qr_subselect,
    subselect, svd_subselect, ConditionBound, NewtonOptions, NnlsResult, ObjectiveReport, Selection, Strategy,
    SubselectOptions,
};
