use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("grid needs at least 2 tau nodes, got {0}")]
    GridTooSmall(usize),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{what} has {got} samples, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("non-finite field sample at tau index {index}")]
    NonFiniteField { index: usize },

    #[error("non-finite coherence sample at tau index {index}")]
    NonFiniteCoherence { index: usize },

    /// The density matrix left the finite domain. `xi` is filled in by the
    /// propagation driver; a bare slice evolution leaves it empty.
    #[error("integration failed at xi={xi:?}, tau={tau}")]
    IntegrationFailure { xi: Option<f64>, tau: f64 },

    #[error("series is zero everywhere; phase is undefined")]
    ZeroSeries,

    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("eigensolver failed at sample {0}")]
    Eigensolver(usize),

    #[error("every sample is degenerate")]
    AllDegenerate,

    #[error("result was stored without {0}")]
    MissingData(&'static str),
}
