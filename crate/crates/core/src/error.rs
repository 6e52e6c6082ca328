use thiserror::Error;

/// Errors produced anywhere in the pipeline.
///
/// Variants fall in two families: validation failures (bad inputs, bad
/// configuration, I/O) and numerical failures (an integrator left the
/// admissible region or produced non-finite values). The CLI maps these to
/// distinct exit codes via [`Error::is_numeric`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid degree sequence: {0}")]
    InvalidSequence(String),

    #[error("degree sequence is unbalanced: {in_stubs} in-stubs vs {out_stubs} out-stubs")]
    Unbalanced { in_stubs: u64, out_stubs: u64 },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("trajectory mismatch: {0}")]
    TrajectoryMismatch(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("malformed CSV at line {line}: {msg}")]
    Csv { line: usize, msg: String },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("invariant violated by {amount:e} at t={t} (class {class}); step size too large?")]
    InvariantViolation { t: f64, class: usize, amount: f64 },

    #[error("non-finite value at t={t}")]
    NonFinite { t: f64 },
}

impl Error {
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::InvariantViolation { .. } | Error::NonFinite { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
