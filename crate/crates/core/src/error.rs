use thiserror::Error;

/// Errors raised by the model, solver, simulator and I/O layers.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value is missing, malformed or violates a constraint.
    #[error("invalid config `{key}`: {message}")]
    Config { key: String, message: String },

    /// A slot cannot be executed, e.g. a remote placement over a zero-rate link.
    #[error("infeasible slot: {0}")]
    Infeasible(String),

    /// Bayes update with an observation of zero probability.
    #[error("degenerate belief update: observation has zero probability on RB {rb}")]
    DegenerateUpdate { rb: usize },

    /// The brute-force oracle refused an instance that is too large to enumerate.
    #[error("instance too large for exhaustive search: {0}")]
    TooLarge(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("malformed document: {0}")]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Config { .. } | Error::Json(_) => 2,
            Error::Infeasible(_) | Error::DegenerateUpdate { .. } | Error::TooLarge(_) => 3,
            Error::Io(_) | Error::Csv(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
