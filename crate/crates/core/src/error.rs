use thiserror::Error;

/// Errors raised by the geometry, model, lattice, Wick and sampling layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Two objects that must live in the same tree do not.
    #[error("structural mismatch: {0}")]
    Structure(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    /// Parameter combination for which an integral or series diverges.
    #[error("divergent parameters: {0}")]
    Divergent(String),

    /// Triangular factorization hit a non-positive pivot.
    #[error("matrix is not positive definite: pivot {pivot} has value {value:e}")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    /// A precondition of a correlation inequality is not met.
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("configuration error(s):\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
