use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    /// Bad parameter or unsupported configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// Input data that cannot be represented (non-finite samples, negative densities, ...).
    #[error("input error: {0}")]
    Input(String),

    /// Interpolation through coincident abscissae.
    #[error("singular fit: abscissae {0} and {1} coincide")]
    SingularFit(usize, usize),

    /// Elliptic solve failed or the operator is not invertible.
    #[error("solver error: {0}")]
    Solver(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
