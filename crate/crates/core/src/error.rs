use thiserror::Error;

/// Error type shared across the simulation crates.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration: malformed distribution tables, impossible
    /// parameter values, unresolvable scenario levers, and the like.
    #[error("configuration error: {0}")]
    Config(String),

    /// A query referenced something that does not exist (e.g. an unknown
    /// network layer name).
    #[error("query error: {0}")]
    Query(String),

    /// Analysis could not produce a defined result from the given inputs.
    #[error("analysis error: {0}")]
    Analysis(String),

    /// The R0 estimator observed no secondary cases, so the tertiary-to-
    /// secondary ratio is undefined.
    #[error("R0 estimate undefined: pooled secondary case count is zero")]
    UndefinedEstimate,

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("failed to parse {path}: {message}")]
    Parse { path: String, message: String },
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn query(msg: impl Into<String>) -> Self {
        Error::Query(msg.into())
    }

    pub fn analysis(msg: impl Into<String>) -> Self {
        Error::Analysis(msg.into())
    }

    pub fn parse(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by bad user input rather than runtime failure.
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::Config(_) | Error::Query(_) | Error::Parse { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
