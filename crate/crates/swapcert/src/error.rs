use thiserror::Error;

/// Errors shared by all modules of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),

    #[error("matrix is not Hermitian (max |M - M^dag| entry = {residual:.3e})")]
    NotHermitian { residual: f64 },

    #[error("invalid tensor factorization: {0}")]
    InvalidFactors(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix function undefined at eigenvalue {eigenvalue:.6e}")]
    UndefinedAtEigenvalue { eigenvalue: f64 },

    #[error("operator is not a rank-1 projector (residual {0:.3e})")]
    NotRankOneProjector(f64),

    #[error("not a valid density operator: {0}")]
    InvalidState(String),

    #[error("not a valid measurement: {0}")]
    InvalidMeasurement(String),

    #[error("channel fails the {predicate} predicate (residual {residual:.3e})")]
    ChannelPredicate {
        predicate: &'static str,
        residual: f64,
    },

    #[error(
        "rank-deficient marginal (min eigenvalue {0:.3e}): \
         Bell violation too low or input degenerate"
    )]
    RankDeficientMarginal(f64),

    #[error(
        "conditional Bell value below the exact self-testing point: \
         outcome {outcome} gives {observed:.9} (expected {expected:.9})"
    )]
    BelowMaximal {
        outcome: String,
        observed: f64,
        expected: f64,
    },

    #[error("certification precondition failed: {0}")]
    Precondition(String),

    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
