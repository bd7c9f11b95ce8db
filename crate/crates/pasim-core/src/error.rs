use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("invalid waveguide parameters: {0}")]
    InvalidWaveguide(String),

    #[error("invalid radiator input: {0}")]
    InvalidRadiator(String),

    #[error("invalid channel parameters: {0}")]
    InvalidChannel(String),

    #[error("zero radiated power: directivity is undefined")]
    ZeroRadiatedPower,

    #[error("non-finite value encountered in {0}")]
    NonFinite(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid metrics input: {0}")]
    InvalidMetrics(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("output file {0} already exists (pass --force to overwrite)")]
    WouldOverwrite(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Numerical failures map to CLI exit code 2; everything else is a
    /// configuration / input error (exit code 1).
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::ZeroRadiatedPower | Error::NonFinite(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
