use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("simplex dimension {j} outside 1..={alpha}")]
    DimensionOutOfRange { j: usize, alpha: usize },

    #[error("expected {expected} vertices, got {found}")]
    VertexCount { expected: usize, found: usize },

    #[error("cube half edge {found} does not match the cutoff D = {expected}")]
    GridMismatch { expected: f64, found: f64 },

    #[error("window is not a subset of the complex window")]
    NotASubWindow,

    #[error("window does not cover W^(r) for r = {r}")]
    WindowTooSmall { r: f64 },

    #[error("the realization has no origin point")]
    MissingOrigin,

    #[error("cube {0} is not in I_r")]
    CubeOutsideWindow(u64),

    #[error("no crossing in bracket [{lo}, {hi}]: {reason}")]
    NoCrossing { lo: f64, hi: f64, reason: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
