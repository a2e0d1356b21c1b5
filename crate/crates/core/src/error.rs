use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} coordinates, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("non-finite sample {value} at node {node} ({coords:?})")]
    NonFinite { node: usize, coords: Vec<f64>, value: f64 },

    #[error("grid functions live on different lattices")]
    DomainMismatch,

    #[error("ball family is empty")]
    EmptyFamily,

    #[error("point {0:?} is not covered by any admissible ball")]
    Uncovered(Vec<f64>),

    #[error("ball with radius {radius} contains no lattice node")]
    SubResolution { radius: f64 },

    #[error("zero denominator: {0}")]
    ZeroDenominator(&'static str),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("bracketing failed after {0} doublings")]
    Bracket(usize),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }
}
