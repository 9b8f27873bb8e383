use thiserror::Error;

/// Errors raised by file handling and the command-line front end.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("truncated file: expected at least {expected} bytes, found {actual}")]
    Truncated { expected: usize, actual: usize },
    #[error("bad magic: the header does not carry the MRC map id")]
    BadMagic,
    #[error("unsupported MRC data mode {0}")]
    UnsupportedMode(i32),
    #[error("malformed EMDB entry id {0:?}")]
    MalformedId(String),
    #[error("download failed: {0}")]
    Http(String),
    #[error("download length mismatch: expected {expected} bytes, received {actual}")]
    LengthMismatch { expected: u64, actual: u64 },
    #[error("{0}")]
    Core(#[from] fscinfo::Error),
    #[error("{failed} compliance check(s) failed")]
    Compliance { failed: usize },
}

pub type Result<T> = std::result::Result<T, CliError>;

impl CliError {
    /// Process exit code: 1 usage, 2 data error, 3 compliance failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Compliance { .. } => 3,
            _ => 2,
        }
    }
}
