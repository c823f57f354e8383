use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or out-of-range input: dimensions, parameters, config keys.
    #[error("input error: {0}")]
    Input(String),

    /// A non-finite value appeared while iterating.
    #[error("numeric error at iteration {iteration}: {message}")]
    Numeric { iteration: usize, message: String },

    /// A state the algorithms rule out mathematically was reached.
    #[error("internal error: {0}")]
    Internal(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn numeric(iteration: usize, msg: impl Into<String>) -> Self {
        Error::Numeric {
            iteration,
            message: msg.into(),
        }
    }
}

pub(crate) fn check_dims(what: &str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::input(format!(
            "{what}: dimension mismatch (expected {expected}, got {got})"
        )));
    }
    Ok(())
}
