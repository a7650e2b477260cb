use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter lies outside the range where the quantity is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// Cholesky pivot at `index` (0-based) was not positive.
    #[error("matrix is not positive definite: pivot {index} = {pivot:e}")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("degenerate conditioning: K(w, w) = {0:e}")]
    DegenerateConditioning(f64),

    #[error("ill-conditioned point configuration: {0}")]
    IllConditioned(String),

    #[error("root finder did not converge after {iterations} iterations (largest pending correction {max_correction:e})")]
    NoConvergence { iterations: usize, max_correction: f64 },

    #[error("series truncation N = {given} is too small; the requested tolerance needs N >= {required}")]
    TruncationTooSmall { given: usize, required: usize },

    #[error("{excluded} of {total} replicates failed, above the 1% limit")]
    TooManyExclusions { excluded: usize, total: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
