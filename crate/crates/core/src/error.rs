use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    #[error("non-finite data{0}")]
    NonFinite(String),

    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },

    #[error("unsupported version {0}")]
    UnsupportedVersion(u32),

    #[error("truncated payload while reading {0}")]
    Truncated(&'static str),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid index: {0}")]
    Index(String),

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("zero scale for variable {variable} ({name}): variable is constant over the training horizon")]
    ZeroScale { variable: usize, name: String },

    #[error("reciprocal transform of zero in variable {0}")]
    ReciprocalOfZero(usize),

    #[error("requested rank {requested} exceeds numerical rank {rank}")]
    RankDeficient { requested: usize, rank: usize },

    #[error("reduced dimension {r} needs {coefficients} coefficients per row, but only {rows} training rows are available")]
    Budget { r: usize, coefficients: usize, rows: usize },

    #[error("diverged at step {0}")]
    Diverged(usize),

    #[error("CFL condition violated: {0}")]
    Cfl(String),
}

impl Error {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }
}
