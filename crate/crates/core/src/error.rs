use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid scene: {0}")]
    Validation(String),

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    /// The ray bundle does not determine a unique convergence point.
    #[error("degenerate ray bundle (condition number {condition:.3e})")]
    DegenerateBundle { condition: f64 },

    #[error("ray does not intersect the element")]
    NoIntersection,

    #[error("sample coordinate ({u}, {v}) outside the screen extent")]
    OutOfBounds { u: f64, v: f64 },

    #[error("no terminal segment crosses the spot plane")]
    EmptySpot,

    #[error("malformed image file: {0}")]
    Image(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
