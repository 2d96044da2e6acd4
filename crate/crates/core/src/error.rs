use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidSpec(String),

    #[error("covariance is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("sample count must be at least 1")]
    ZeroCount,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("analytic box mass is not available for {0}; use Monte Carlo membership instead")]
    UnsupportedSpec(String),

    #[error("invalid region: {0}")]
    InvalidRegion(String),

    #[error("invalid resolution ladder: {0}")]
    InvalidResolutions(String),

    #[error("batch contains a non-finite value at sample {sample}, coordinate {coord}")]
    NonFinite { sample: usize, coord: usize },

    #[error("matrix is rank deficient (smallest singular value {smallest:e})")]
    RankDeficient { smallest: f64 },

    #[error("input outside the block domain: {0}")]
    OutOfDomain(String),

    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error(
        "Jacobi iteration did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})"
    )]
    NoConvergence { sweeps: usize, off_norm: f64 },

    #[error("spectrum is singular (eigenvalue {eigenvalue:e}); sphering needs n >= N")]
    SingularSpectrum { eigenvalue: f64 },

    #[error("partition violated: {0}")]
    PartitionViolation(String),

    #[error("relative loss {0} lies outside [0, 1]")]
    LossOutOfRange(f64),

    #[error("{0} has zero entropy")]
    ZeroEntropy(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
