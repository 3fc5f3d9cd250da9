use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("negative weight {weight} at index {index}")]
    NegativeWeight { index: usize, weight: f64 },
    #[error("weight at index {0} is not finite")]
    NonFiniteWeight(usize),
    #[error("universe must contain at least one element")]
    EmptyUniverse,
    #[error("all weights are zero; total weight must be positive")]
    AllZero,
    #[error("invalid interval [{lo}..{hi}] for universe of size {n}")]
    InvalidInterval { lo: usize, hi: usize, n: usize },
    #[error("index {index} out of range 1..={n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("epsilon {0} outside the permitted range")]
    InvalidEpsilon(f64),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("vector does not sum to 1 (sum = {0})")]
    NotNormalized(f64),
    #[error("neighborhood center must have positive weight")]
    ZeroWeightCenter,
    #[error("invalid generator: {0}")]
    Generator(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code for the CLI: 2 for I/O failures, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io(_) => 2,
            Error::Csv(e) if matches!(e.kind(), csv::ErrorKind::Io(_)) => 2,
            Error::Json(e) if e.is_io() => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
