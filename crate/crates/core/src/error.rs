use std::io;

use thiserror::Error;

/// Errors raised while decoding trace files.
///
/// Binary-format errors carry the byte offset of the offending field; text
/// errors carry the 1-based line number.
#[derive(Debug, Error)]
pub enum TraceError {
    #[error("bad magic at byte {offset}: expected \"TRRP\"")]
    BadMagic { offset: u64 },
    #[error("unsupported trace version {found} at byte {offset}")]
    BadVersion { offset: u64, found: u32 },
    #[error("invalid access kind byte 0x{byte:02x} at byte {offset}")]
    BadKind { offset: u64, byte: u8 },
    #[error("truncated record at byte {offset}")]
    Truncated { offset: u64 },
    #[error("trailing data after {declared} declared records at byte {offset}")]
    TrailingData { offset: u64, declared: u64 },
    #[error("line {line}: {message}")]
    Text { line: usize, message: String },
    #[error("trace I/O: {0}")]
    Io(#[from] io::Error),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("metric undefined: {0}")]
    UndefinedMetric(&'static str),
    #[error("invalid cache geometry: {0}")]
    InvalidGeometry(String),
    #[error("degenerate profile: every block has a zero execution count")]
    DegenerateProfile,
    #[error("percentile {0} outside (0, 1]")]
    InvalidPercentile(f64),
    #[error("profile line {line}: {message}")]
    Profile { line: usize, message: String },
    #[error("temperature map: {0}")]
    MapFormat(String),
    #[error("infeasible pattern: {0}")]
    InfeasibleSpec(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: io::Error,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(context: impl Into<String>, source: io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    /// True for malformed input data, as opposed to bad usage or configuration.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Trace(_) | Error::Profile { .. } | Error::MapFormat(_) | Error::DegenerateProfile
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
