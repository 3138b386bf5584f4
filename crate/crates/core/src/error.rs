use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    ChannelMismatch { expected: usize, found: usize },
    LengthMismatch { expected: usize, found: usize },
    NonFinite,
    InvalidConfig(String),
    /// A linear system could not be solved (near-singular matrix).
    Singular,
    /// A reference signal has zero energy.
    ZeroEnergy,
    /// A scene with no target or no noise.
    DegenerateScene(&'static str),
    Format(FormatError),
}

/// Failures while decoding or validating a `.gcfs` weight container.
#[derive(Debug, Clone, PartialEq)]
pub enum FormatError {
    BadMagic,
    UnsupportedVersion(u32),
    Truncated,
    Checksum { stored: u32, computed: u32 },
    Malformed(String),
    /// Tensor names, shapes or dtypes differ from what the config requires.
    TensorMismatch(String),
    /// The container holds a different network variant than requested.
    ConfigMismatch { expected: String, found: String },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::ChannelMismatch { expected, found } => {
                write!(f, "expected {expected} channels, got {found}")
            }
            Error::LengthMismatch { expected, found } => {
                write!(f, "expected length {expected}, got {found}")
            }
            Error::NonFinite => f.write_str("input contains non-finite samples"),
            Error::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
            Error::Singular => f.write_str("linear system is singular"),
            Error::ZeroEnergy => f.write_str("reference signal has zero energy"),
            Error::DegenerateScene(msg) => write!(f, "degenerate scene: {msg}"),
            Error::Format(e) => e.fmt(f),
        }
    }
}

impl fmt::Display for FormatError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FormatError::BadMagic => f.write_str("not a GCFS container (bad magic)"),
            FormatError::UnsupportedVersion(v) => write!(f, "unsupported container version {v}"),
            FormatError::Truncated => f.write_str("container is truncated"),
            FormatError::Checksum { stored, computed } => write!(
                f,
                "checksum mismatch: stored {stored:#010x}, computed {computed:#010x}"
            ),
            FormatError::Malformed(msg) => write!(f, "malformed container: {msg}"),
            FormatError::TensorMismatch(msg) => write!(f, "tensor set mismatch: {msg}"),
            FormatError::ConfigMismatch { expected, found } => {
                write!(f, "config mismatch: expected {expected}, container holds {found}")
            }
        }
    }
}

impl core::error::Error for Error {}
impl core::error::Error for FormatError {}

impl From<FormatError> for Error {
    fn from(e: FormatError) -> Self {
        Error::Format(e)
    }
}
