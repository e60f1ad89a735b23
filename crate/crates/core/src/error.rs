use thiserror::Error;

/// Errors raised by the angle toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum AngleError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("sample period mismatch: {0} vs {1}")]
    SamplePeriodMismatch(f64, f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("angle {0} outside [0, pi]")]
    AngleOutOfRange(f64),

    #[error("zero matrix has no singular angle")]
    ZeroMatrix,

    #[error("matrix is not Hermitian positive definite")]
    NotHermitianPositiveDefinite,

    #[error("system is not stable: {0}")]
    Unstable(String),

    #[error("feedback loop is ill-posed: det(I + C(inf) P(inf)) = {0:.3e}")]
    IllPosed(f64),

    #[error("system must be SISO, got {0}x{0}")]
    NotSiso(usize),

    #[error("invalid sector [{a}, {b}]: need b > a > 0")]
    InvalidSector { a: f64, b: f64 },

    #[error("invalid passivity indices: {0}")]
    InvalidIndices(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("all probes degenerate: {0}")]
    DegenerateProbes(String),

    #[error("operator is not output strictly passive on probe {probe}: <u, Pu> = {inner:.3e}")]
    NotOutputStrictlyPassive { probe: String, inner: f64 },

    #[error("feedback iteration did not converge at step {step} (residual {residual:.3e})")]
    FeedbackDivergence { step: usize, residual: f64 },

    #[error("zero frequency response at omega = {0}")]
    ZeroResponse(f64),

    #[error("sampled lower bound cannot certify a small-angle condition")]
    LowerBoundProvenance,

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = AngleError> = std::result::Result<T, E>;
