use thiserror::Error;

/// Errors raised by the learner and the simulated oracle.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} qubits, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("malformed input: {0}")]
    Format(String),
    #[error("invalid target: {0}")]
    InvalidTarget(String),
    #[error("qubit {site} is not in the support of {pauli}")]
    InvalidSite { site: usize, pauli: String },
    #[error("evolution time {0} is negative; only forward evolution is available")]
    NegativeTime(f64),
    #[error("duration {t} is not an integer multiple of the fixed step {theta}")]
    Granularity { t: f64, theta: f64 },
    #[error("insufficient samples: have {have}, need at least {need}")]
    InsufficientSamples { have: usize, need: usize },
    #[error("{what} needs n <= {limit} qubits, got {n}")]
    TooLarge { what: &'static str, n: usize, limit: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::Dimension { expected, found })
    }
}
