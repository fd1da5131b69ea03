use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("rejected input: {0}")]
    InvalidInput(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("function is not omega-psh: smallest eigenvalue {min_eig:.3e} below -{tol:.1e} at point {index}")]
    NotPsh {
        index: usize,
        min_eig: f64,
        tol: f64,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("inconsistent hypothesis data: {0}")]
    Hypothesis(String),

    #[error("solver diverged: {0}")]
    Divergence(String),

    #[error("invalid certificate: {0}")]
    Certificate(String),

    #[error("inconclusive fit: {0}")]
    Inconclusive(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
