use thiserror::Error;

/// Errors raised by sampling, solving, estimation and experiment plumbing.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("grid level {coarse} is not nested in level {fine}")]
    NonNested { coarse: u32, fine: u32 },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("coefficient not strictly positive and finite at cell {index}: {value}")]
    NonPositiveCoefficient { index: usize, value: f64 },

    #[error("dirac atom at {x0} is not a node of the level-{level} mesh")]
    MisalignedDirac { x0: f64, level: u32 },

    #[error("circulant embedding spectrum still negative at torus size {torus} (min eigenvalue {min_eigenvalue:e})")]
    EmbeddingFailed { torus: usize, min_eigenvalue: f64 },

    #[error("conjugate gradient stopped after {iterations} iterations at relative residual {residual:e}")]
    SolverDiverged { iterations: usize, residual: f64 },

    #[error("need at least {need} samples, got {got}")]
    InsufficientSamples { need: usize, got: usize },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("{failed} of {total} samples failed, above the 1% limit")]
    TooManyFailures { failed: usize, total: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Toml(#[from] toml::ser::Error),

    #[error(transparent)]
    Config(#[from] toml::de::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
