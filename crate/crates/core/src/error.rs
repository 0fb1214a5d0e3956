use std::io;

/// Errors produced by the solver library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Invalid shapes, counts, or hyperparameters.
    #[error("configuration error: {0}")]
    Config(String),

    /// A parameter gradient entry became NaN or infinite.
    #[error("non-finite gradient at parameter index {index} (value {value})")]
    NonFiniteGradient { index: usize, value: f64 },

    /// A loss or intermediate evaluation became NaN or infinite.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Training loss exceeded the divergence guard.
    #[error("training diverged at epoch {epoch} (loss {loss})")]
    Diverged { epoch: usize, loss: f64 },

    /// A relative metric whose reference norm is zero.
    #[error("undefined metric: {0}")]
    UndefinedMetric(&'static str),

    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    #[error("malformed data: {0}")]
    Format(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn config_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}
