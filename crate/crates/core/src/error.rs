use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("{what} ({value}) is not divisible by {divisor}")]
    Divisibility {
        what: &'static str,
        value: usize,
        divisor: usize,
    },

    #[error("lattice of {modes} modes x {steps} steps exceeds the limit of {limit} entries")]
    SizeLimit {
        modes: usize,
        steps: usize,
        limit: usize,
    },

    #[error("budget cap of {cap} cost units exceeded (planned {planned}); {completed} of {total} indices completed")]
    BudgetExceeded {
        cap: f64,
        planned: f64,
        completed: usize,
        total: usize,
        partial: Box<crate::estimator::EstimatorOutput>,
    },

    #[error("degenerate surface: {0}")]
    DegenerateSurface(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
