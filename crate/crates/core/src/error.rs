use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("point outside the domain: {0}")]
    OutOfDomain(String),

    #[error("undefined result: {0}")]
    UndefinedResult(String),

    #[error("internal consistency error: {0}")]
    Internal(String),

    #[error("linear program failed: {0}")]
    Lp(String),

    #[error("simulation failed at step {step}: {message}")]
    Simulation { step: usize, message: String },

    #[error("run {run} (seed {seed}) failed: {source}")]
    RunFailed {
        run: usize,
        seed: u64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
