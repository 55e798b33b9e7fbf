use thiserror::Error;

/// Errors produced by the analysis, simulation and I/O layers.
#[derive(Debug, Error)]
pub enum Error {
    /// A scalar parameter is outside its physical or mathematical domain.
    #[error("{name} = {value} is out of range: {reason}")]
    Domain {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    /// A covariance matrix failed validation (shape, symmetry, definiteness, physicality).
    #[error("invalid covariance matrix: {0}")]
    InvalidMatrix(String),

    #[error("mode index {index} out of range for a {n_modes}-mode state")]
    ModeIndex { index: usize, n_modes: usize },

    /// A matrix that must be inverted is numerically singular.
    #[error("numerically singular matrix in {0}")]
    Singular(&'static str),

    #[error("numerical failure: {0}")]
    Numerical(String),

    /// The key rate is not positive even at unity transmission.
    #[error("insecure at unity transmission (key rate {rate} bits/use)")]
    InsecureAtUnity { rate: f64 },

    #[error("estimation failed: {0}")]
    Estimation(String),

    /// Input data is degenerate (e.g. perfectly correlated samples).
    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(name: &'static str, value: f64, reason: &'static str) -> Self {
        Error::Domain {
            name,
            value,
            reason,
        }
    }

    /// True for errors caused by invalid input rather than a failed computation.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Domain { .. } | Error::InvalidMatrix(_) | Error::ModeIndex { .. } | Error::Parse(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
