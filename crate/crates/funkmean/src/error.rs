use thiserror::Error;

/// Errors produced by the funkmean library.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("time grid must contain at least 2 points, but had {0}")]
    EmptyGrid(usize),

    #[error("time grid values must lie in [0,1]; found {0}")]
    TimesOutOfRange(f64),

    #[error("time grid must be strictly increasing")]
    NonMonotoneTimes,

    #[error("requested p = {requested} basis functions but the spline basis only spans {available}")]
    SplineBasisTooSmall { requested: usize, available: usize },

    #[error("basis dimension p must be at least 1")]
    InvalidBasisDim,

    #[error("spline order must be at least 1")]
    InvalidSplineOrder,

    #[error("spline knots must be sorted and lie in [0,1]")]
    InvalidSplineKnots,

    #[error("columns are linearly dependent at working tolerance (column {0})")]
    RankDeficient(usize),

    #[error("all time points are equal; cannot rescale a degenerate domain")]
    DegenerateDomain,

    #[error("curve values must be finite; found a NaN or infinity")]
    NonFiniteValue,

    #[error("curve grid has fewer than 2 points")]
    GridTooCoarse,

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("group needs at least 2 observations, but had {0}")]
    TooFewObservations(usize),

    #[error(
        "covariance matrix of group {group} is singular at working tolerance \
         (condition number {condition:.3e}); consider lowering p"
    )]
    SingularCovariance { group: usize, condition: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("Hotelling T^2 requires exactly 2 groups, but {0} were given")]
    NotTwoGroups(usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("bootstrap resampling kept producing singular group covariances in group {0}")]
    ResampleDegenerate(usize),

    #[error("Cholesky factorization failed even after jitter up to {0:.3e}")]
    FactorizationFailed(f64),

    #[error("bessel_k requires x > 0, got {0}")]
    DomainError(f64),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("parse error at line {line}: {message}")]
    ParseError { line: usize, message: String },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("I/O failure: {0}")]
    IoFailure(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::IoFailure(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
