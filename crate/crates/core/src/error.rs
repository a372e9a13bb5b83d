use thiserror::Error;

/// Errors produced by the model, solver and analysis layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid lattice configuration: {0}")]
    InvalidConfig(String),

    #[error("operation requires an imaginary Stark ladder configuration")]
    RequiresImaginaryStark,

    #[error("matrix is not square or has zero dimension")]
    BadShape,

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("QR iteration did not converge (eigenvalue index {index})")]
    NonConvergence { index: usize },

    #[error("matrix is not complex symmetric (max |M - M^T| = {0:e})")]
    NotComplexSymmetric(f64),

    #[error("eigenvector {index} is self-orthogonal under the bilinear form (|psi^T psi| = {value:e}); near an exceptional point")]
    IllConditioned { index: usize, value: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("state is not unit normalized (norm = {0})")]
    NotNormalized(f64),

    #[error("indicator does not change across bracket [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },

    #[error("fit input must be strictly positive")]
    NonPositive,

    #[error("not enough points for fit: need {need}, got {got}")]
    TooFewPoints { need: usize, got: usize },

    #[error("eigenvalue {0} has no K-symmetry partner")]
    UnpairedEigenvalue(usize),

    #[error("Bessel argument out of supported range: n = {n}, x = {x}")]
    OutOfRange { n: i64, x: f64 },

    #[error("degenerate profile: {0}")]
    DegenerateProfile(String),

    #[error("integrator step size underflow at t = {0}")]
    StepSizeUnderflow(f64),

    #[error("time grid must be ascending and start at 0")]
    BadTimeGrid,

    #[error("density level {0:e} is not crossed by any site")]
    LevelNotCrossed(f64),

    #[error("analysis window too short: {0}")]
    WindowTooShort(String),

    #[error("site index {site} outside 1..={len}")]
    SiteOutOfRange { site: usize, len: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
