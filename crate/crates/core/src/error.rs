use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation (e.g. `t <= 0`).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    /// Grid values contain NaN or infinities.
    #[error("corrupt data: {0}")]
    CorruptData(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Input violates a sign hypothesis (e.g. a datum that must be nonnegative).
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    /// The lattice window or grid box is too small to trust the result.
    #[error("truncation error: {message}")]
    Truncation {
        message: String,
        required_radius: Option<usize>,
    },

    #[error("cone violation: {0}")]
    ConeViolation(String),

    #[error("not converged: {0}")]
    NotConverged(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures that indicate an untrustworthy numerical setup
    /// rather than a bad request.
    pub fn is_numerical_health(&self) -> bool {
        matches!(
            self,
            Error::Truncation { .. } | Error::NotConverged(_) | Error::CorruptData(_)
        )
    }
}
