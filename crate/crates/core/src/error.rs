use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Everything that can go wrong between reading a dynamic spectrum and
/// writing the candidate list.
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("format error: {0}")]
    Format(String),

    #[error("length error: expected {expected} bytes of payload, found {found}")]
    Length { expected: usize, found: usize },

    #[error("data error: {0}")]
    Data(String),

    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),

    #[error("bounds error: range [{start}, {end}) is not a non-empty subrange of [0, {len})")]
    Bounds { start: usize, end: usize, len: usize },

    #[error("empty output: {0}")]
    EmptyOutput(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("degenerate noise: only {surviving} pixel(s) survived clipping")]
    DegenerateNoise { surviving: usize },

    #[error("undefined SNR: background RMS is zero")]
    UndefinedSnr,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("insufficient span: maximum shift of {max_shift} bins needs more than {n_time} time bins")]
    InsufficientSpan { max_shift: usize, n_time: usize },

    #[error("span error: {0}")]
    Span(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("render error: {0}")]
    Render(String),

    #[error("chunk {chunk} failed during {stage}: {source}")]
    Stage {
        chunk: usize,
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Process exit code for the command-line front end:
    /// 2 config error, 3 input format error, 4 runtime stage error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Format(_) | Error::Length { .. } | Error::Data(_) | Error::InvalidSpectrum(_) => 3,
            _ => 4,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
