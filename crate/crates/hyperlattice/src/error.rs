use thiserror::Error;

/// Error taxonomy for the whole toolkit.
///
/// `Domain` covers violated preconditions (bad parameters), everything else
/// is a numeric failure of some kind. The CLI maps `Domain` to exit code 2
/// and the numeric variants to exit code 3.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("admissibility error: {0}")]
    Admissibility(String),

    #[error("truncation error: {0}")]
    Truncation(String),

    #[error("not a frame: {0}")]
    NotAFrame(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("ill-conditioned comparison: {0}")]
    IllConditioned(String),

    #[error("discretization error: {0}")]
    Discretization(String),
}

impl Error {
    /// True for precondition violations, false for numeric failures.
    pub fn is_domain(&self) -> bool {
        matches!(self, Error::Domain(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
