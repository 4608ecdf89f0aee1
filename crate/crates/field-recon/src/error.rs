use thiserror::Error;

/// Errors produced by model construction, filtering and analysis.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: &'static str, reason: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// The Gram matrix (or a regularized variant) is too close to singular to
    /// invert reliably. Callers count these as reconstruction failures.
    #[error("ill-conditioned system: condition estimate {cond:.3e} exceeds {threshold:.3e}")]
    IllConditioned { cond: f64, threshold: f64 },

    #[error("asymptotic expectation over 1/lambda diverges for beta = {beta}")]
    Divergent { beta: f64 },

    #[error("design target {target} is infeasible over the search range")]
    InfeasibleTarget { target: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParam {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
