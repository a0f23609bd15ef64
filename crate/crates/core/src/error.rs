use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("no records")]
    NoRecords,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("window [{t0}, {t0}+{width}) exceeds series of length {len}")]
    WindowOutOfBounds { t0: usize, width: usize, len: usize },

    #[error("no connected pair of nodes")]
    NoConnectedPair,

    #[error("no active nodes in window")]
    EmptyNodeSet,

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_) | Error::WindowOutOfBounds { .. } => 2,
            Error::Numerical(_) => 4,
            _ => 3,
        }
    }
}
