use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("matrix is not Hermitian (max |M - M†| = {defect:e})")]
    NotHermitian { defect: f64 },

    #[error("vector not in span of basis (residual {residual:e})")]
    NotInSpan { residual: f64 },

    #[error("bad weights: {0}")]
    BadWeights(String),

    #[error("operation requires the tracial state")]
    NotTracial,

    #[error("elements live on different factor representations")]
    RepMismatch,

    #[error("element is not a projection (defect {defect:e})")]
    NotAProjection { defect: f64 },

    #[error("projection is zero")]
    ZeroProjection,

    #[error("element is not a rank-1 projection")]
    NotRankOneProjection,

    #[error("element is not self-adjoint (max |T - T†| = {defect:e})")]
    NotSelfAdjoint { defect: f64 },

    #[error("operator is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPositive { min_eigenvalue: f64 },

    #[error("spectral projection failed span membership (residual {residual:e})")]
    MembershipFailed { residual: f64 },

    #[error("complete-positivity checks disagree: {0}")]
    InternalDisagreement(String),

    #[error("unsupported dimension {0}")]
    UnsupportedDimension(usize),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn dim_mismatch(expected: impl ToString, found: impl ToString) -> Error {
    Error::DimensionMismatch {
        expected: expected.to_string(),
        found: found.to_string(),
    }
}
