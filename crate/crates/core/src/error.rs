use thiserror::Error;

/// Errors raised by the coding, analysis and simulation layers.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter set that cannot describe a valid code, ensemble or run.
    #[error("configuration error: {0}")]
    Config(String),
    /// Two known symbols about the same bit disagree, or a trellis pass ran
    /// out of states. Never happens on a genuine erasure-channel trace.
    #[error("inconsistent input: {0}")]
    Inconsistent(String),
    /// A numerical routine failed to converge or to bracket a root.
    #[error("numeric error: {0}")]
    Numeric(String),
    /// Malformed serialized trace.
    #[error("format error: {0}")]
    Format(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }
}
