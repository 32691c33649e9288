use alloc::string::String;

use thiserror::Error;

use crate::solver::SolveReport;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("non-positive diagonal entry {value} at row {row}")]
    NonPositiveDiagonal { row: usize, value: f64 },
    #[error(
        "linear solve did not converge after {} iterations (relative residual {:e})",
        .0.iterations, .0.final_relative_residual
    )]
    NotConverged(SolveReport),
    #[error("matrix is not symmetric at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },
    #[error("eigenvalue iteration did not converge after {0} sweeps")]
    EigenNotConverged(usize),
    #[error("feature column `{0}` has zero variance")]
    ZeroVariance(String),
    #[error("empty input: {0}")]
    Empty(&'static str),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
