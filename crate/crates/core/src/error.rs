use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("grid has {n_steps} steps; dyadic estimators need a power of two, resample the path first")]
    NotDyadic { n_steps: usize },

    #[error("Chen relation violated: defect {defect:e} exceeds bound {bound:e}")]
    ChenDefect { defect: f64, bound: f64 },

    #[error("partition knot {knot} does not land on the grid between indices {start} and {end}")]
    OffGrid { knot: f64, start: usize, end: usize },

    #[error("dense storage requested for {n_steps} steps, limit is {limit}")]
    DenseLimit { n_steps: usize, limit: usize },

    #[error("solution magnitude {magnitude:e} exceeded {limit:e} at step {step}")]
    BlowUp { step: usize, magnitude: f64, limit: f64 },

    #[error("malformed path data: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn dimension(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }
}
