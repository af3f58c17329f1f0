use thiserror::Error;

use crate::problem::ValidationReport;

/// Errors raised by the reduction pipeline, encoders, solvers and simulators.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid problem: {0}")]
    InvalidProblem(ValidationReport),

    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch { what: &'static str, expected: usize, found: usize },

    #[error("continuous constraint block F2 is rank deficient (sigma_min = {sigma_min:e}, cutoff = {cutoff:e}); rank(F2) = m is required")]
    RankDeficientF2 { sigma_min: f64, cutoff: f64 },

    #[error("objective is unbounded below: reduced continuous block has eigenvalue {min_eigenvalue:e}")]
    UnboundedBelow { min_eigenvalue: f64 },

    #[error(
        "objective is unbounded along a nullspace direction of the reduced continuous block (overlap {overlap:e})"
    )]
    UnboundedLinear { overlap: f64 },

    #[error("domain of size {size} is not a power of two")]
    NotPowerOfTwo { size: usize },

    #[error("domain is not evenly spaced along a line")]
    NotEvenlySpaced,

    #[error("domain is empty")]
    EmptyDomain,

    #[error("{p} qubits exceeds the configured cap of {cap}")]
    QubitCapExceeded { p: usize, cap: usize },

    #[error("iterative solve did not converge: relative residual {residual:e} after {iterations} iterations")]
    SolverFailure { residual: f64, iterations: usize },

    #[error("eigensolver did not converge: {0}")]
    EigensolverFailure(String),

    #[error("linear operator cannot be materialized as a dense matrix")]
    OperatorNotMaterializable,

    #[error("operator K^H E^-1 J is rank deficient (rank {rank} < {n1})")]
    RankDeficientResponse { rank: usize, n1: usize },

    #[error("{n1} discrete variables exceed the {n2a} observations")]
    TooManyDiscrete { n1: usize, n2a: usize },

    #[error("metric G is not Hermitian positive definite")]
    MetricNotPositiveDefinite,

    #[error("quadratic form is not diagonal")]
    NotDiagonal,

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_len(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { what, expected, found })
    }
}
