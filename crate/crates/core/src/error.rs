use thiserror::Error;

/// Errors raised by the estimators, oracles and configuration layer.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("point of depth {have} is too shallow, {needed} coordinates required")]
    Depth { needed: usize, have: usize },

    #[error("cannot shift a point of depth 1; truncate deeper")]
    Underflow,

    #[error("system mismatch: {0}")]
    SystemMismatch(String),

    #[error("budget exceeded for {what}: required {required}, cap {cap}")]
    Budget {
        what: String,
        required: u128,
        cap: u128,
    },

    #[error("level window is empty (alpha = {alpha}); nearest achievable average is {nearest}")]
    EmptyLevel { alpha: f64, nearest: f64 },

    #[error("contract violated: {0}")]
    Contract(String),

    #[error("inconclusive: {0}")]
    Inconclusive(String),

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn budget(what: impl Into<String>, required: u128, cap: u128) -> Self {
        Error::Budget {
            what: what.into(),
            required,
            cap,
        }
    }

    pub fn config(line: usize, message: impl Into<String>) -> Self {
        Error::Config {
            line,
            message: message.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
