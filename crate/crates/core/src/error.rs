use thiserror::Error;

use crate::cp::SolveTrace;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Shapes or lengths that do not line up.
    #[error("dimension error: {0}")]
    Dimension(String),

    /// Caller-supplied parameter outside its allowed range.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// A solver produced a non-finite value or a singular system. The trace
    /// accumulated up to the failure is kept so it can still be written out.
    #[error("numerical error: {message}")]
    Numerical {
        message: String,
        trace: Option<Box<SolveTrace>>,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>, trace: Option<SolveTrace>) -> Self {
        Error::Numerical {
            message: msg.into(),
            trace: trace.map(Box::new),
        }
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: msg.into(),
        }
    }
}
