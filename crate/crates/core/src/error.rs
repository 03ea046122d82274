use thiserror::Error;

use crate::channel::ChannelClass;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("matrix is not positive definite (min eigenvalue {min_eig:e}, threshold {threshold:e})")]
    NotPositiveDefinite { min_eig: f64, threshold: f64 },

    #[error("singular block in 2x2 block inverse: {0}")]
    SingularBlock(String),

    #[error("matrix is singular at pivot {pivot}")]
    SingularMatrix { pivot: usize },

    #[error("{which} Gram matrix is rank deficient (min eigenvalue {min_eig:e})")]
    RankDeficientChannel { which: &'static str, min_eig: f64 },

    #[error("power budget must be finite and positive, got {0}")]
    NonPositivePower(f64),

    #[error("could not generate a {want:?} channel after {tries} attempts")]
    UnsatisfiableClass { want: ChannelClass, tries: usize },

    #[error("schema error{}: {message}", field.as_ref().map(|f| format!(" in `{f}`")).unwrap_or_default())]
    Schema {
        field: Option<String>,
        message: String,
    },

    #[error("covariance is infeasible: min eigenvalue {min_eig:e}, trace {trace} against budget {power}")]
    InfeasibleCovariance { min_eig: f64, trace: f64, power: f64 },

    #[error("noise correlation is infeasible: min eigenvalue of I - AA* is {min_eig:e}")]
    CorrelationInfeasible { min_eig: f64 },

    #[error("channel class {found:?} does not satisfy the {expected} hypothesis")]
    WrongChannelClass {
        expected: &'static str,
        found: ChannelClass,
    },

    #[error("stacked basis matrix is not invertible (condition number {cond:e})")]
    SingularBasis { cond: f64 },

    #[error("no feasible Riccati solution found after {tries} tries")]
    FeasibleNotFound { tries: usize },

    #[error("no feasible noise-correlation candidate")]
    NoFeasibleCandidate,

    #[error("rank of K is {rank}, expected a rank-deficient covariance (n = {n})")]
    NotRankDeficient { rank: usize, n: usize },
}

impl Error {
    pub(crate) fn dims(expected: impl Into<String>, found: impl Into<String>) -> Self {
        Error::DimensionMismatch {
            expected: expected.into(),
            found: found.into(),
        }
    }

    pub(crate) fn schema(field: Option<&str>, message: impl Into<String>) -> Self {
        Error::Schema {
            field: field.map(str::to_owned),
            message: message.into(),
        }
    }
}
