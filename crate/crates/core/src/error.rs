use thiserror::Error;

/// Errors raised by the toolkit.
///
/// Variants split into two families: contract violations by the caller
/// (bad labels, mismatched layouts, out-of-range parameters) and numerical
/// invariant violations, which indicate that a computation produced an object
/// that is not what the mathematics guarantees. [`Error::is_invariant_violation`]
/// distinguishes the two.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("duplicate factor label `{0}`")]
    DuplicateLabel(String),

    #[error("unknown factor label `{0}`")]
    UnknownLabel(String),

    #[error("label sets overlap on `{0}`")]
    OverlappingLabels(String),

    #[error("factor `{0}` has invalid dimension {1}")]
    InvalidDimension(String, usize),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("layout mismatch: {0}")]
    LayoutMismatch(String),

    #[error("not a permutation of the layout labels: {0:?}")]
    NotAPermutation(Vec<String>),

    #[error("matrix is not Hermitian (anti-Hermitian norm {0:e})")]
    NotHermitian(f64),

    #[error("trace is {0}, expected 1")]
    InvalidTrace(f64),

    #[error("negative eigenvalue {0:e} below clamping threshold")]
    NegativeEigenvalue(f64),

    #[error("vector norm is {0}, expected 1")]
    NotNormalized(f64),

    #[error("matrix is not unitary (deviation {0:e})")]
    NotUnitary(f64),

    #[error("channel is not trace-preserving (deviation {0:e})")]
    NotTracePreserving(f64),

    #[error("channel has no Kraus operators")]
    EmptyChannel,

    #[error("rank {rank} exceeds dimension {dim}")]
    RankTooLarge { rank: usize, dim: usize },

    #[error("dimension {dim} exceeds configured cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("extension factor `{0}` is acted upon by the dynamics")]
    NonInertExtension(String),

    #[error("input has weight {0:e} outside the support of the recovery reference state")]
    SupportViolation(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("numerical invariant violated: {0}")]
    InvariantViolation(String),
}

impl Error {
    /// True for errors that signal a numerical bug rather than bad input.
    pub fn is_invariant_violation(&self) -> bool {
        matches!(
            self,
            Error::NegativeEigenvalue(_) | Error::InvariantViolation(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
