use std::fmt;

/// Where in an input a format error was detected.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Line { line: usize, column: usize },
    Offset(usize),
    Unknown,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Line { line, column } => write!(f, "line {line}, column {column}"),
            Location::Offset(o) => write!(f, "byte offset {o}"),
            Location::Unknown => write!(f, "unknown position"),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("format error at {at}: {message}")]
    Format { message: String, at: Location },
    #[error("infeasible problem: {0}")]
    InfeasibleProblem(String),
    #[error("prior has no positive weight on a free cell")]
    EmptyPrior,
    #[error("grid has no free cells")]
    EmptyFreeSpace,
    #[error("no free cell found inside the informed ellipse")]
    EllipseExhausted,
    #[error("configuration error: {0}")]
    Configuration(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn format(message: impl Into<String>, at: Location) -> Self {
        Error::Format { message: message.into(), at }
    }

    pub(crate) fn from_json(err: serde_json::Error) -> Self {
        if err.is_io() {
            return Error::Io(err.into());
        }
        Error::format(err.to_string(), Location::Line { line: err.line(), column: err.column() })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
