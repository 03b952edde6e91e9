use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Caller violated an operation precondition.
    #[error("usage error: {0}")]
    Usage(String),

    #[error("filter syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("build error: {0}")]
    Build(String),

    #[error("data format error: {0}")]
    Format(String),

    #[error("checksum mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    Checksum { stored: u32, computed: u32 },

    #[error("unsupported format version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code used by the bench CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) | Error::Syntax { .. } | Error::Schema(_) => 2,
            Error::Build(_)
            | Error::Format(_)
            | Error::Checksum { .. }
            | Error::Version { .. }
            | Error::Io(_)
            | Error::Csv(_) => 3,
            Error::Invariant(_) => 4,
        }
    }
}
