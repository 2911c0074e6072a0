use thiserror::Error;

/// Errors produced by samplers, schedules, oracles and diagnostics.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid dimension: {0} (must be at least 1)")]
    InvalidDimension(usize),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("contract violation: {0}")]
    ContractViolation(String),

    /// The directional probe offset fell below the underflow floor.
    #[error("step schedule exhausted at iteration {t} (offset {offset:e} below floor {floor:e})")]
    ScheduleExhausted { t: u64, offset: f64, floor: f64 },

    #[error("insufficient data: need at least {needed} usable points, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("unsupported objective `{0}`: {1}")]
    UnsupportedObjective(String, String),

    #[error("degenerate start: {0}")]
    DegenerateStart(String),

    #[error("trajectory csv: {0}")]
    Csv(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}
