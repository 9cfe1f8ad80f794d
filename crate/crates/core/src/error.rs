use thiserror::Error;

/// Errors raised by the engines and the command harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("conjugate exponent is unbounded: p- = {0}")]
    UnboundedConjugate(f64),

    #[error("quadrature did not converge: {0}")]
    NonConvergence(String),

    #[error("principal value sequence is not Cauchy: last increment {increment:e} exceeds {tol:e}")]
    PvNotCauchy { increment: f64, tol: f64 },

    #[error("degree cap {cap} exceeded: result needs degree {needed}")]
    Truncation { cap: usize, needed: usize },

    #[error("factorial overflow for multi-index of order {0}")]
    Overflow(usize),

    #[error("quadrature rule with {nodes} nodes is not exact for degree {degree}")]
    QuadratureDegree { nodes: usize, degree: usize },

    #[error("bisection bracket failure: {0}")]
    Bracket(String),

    #[error("point {0:?} is not covered by any ball of the family")]
    Uncovered(Vec<f64>),

    #[error("function is not normalized: norm {0} exceeds 1/2")]
    NotNormalized(f64),

    #[error("unknown registry name: {0}")]
    UnknownName(String),

    #[error("io: {0}")]
    Io(String),

    #[error("config: {0}")]
    Config(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
