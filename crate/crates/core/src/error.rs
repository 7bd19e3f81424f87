use alloc::string::String;
use core::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A configuration knob is outside its valid range.
    InvalidConfig(String),
    /// Event at `index` addresses a pixel outside the frame.
    EventOutOfBounds { index: usize, x: u16, y: u16 },
    /// Two containers that must share a geometry do not.
    ShapeMismatch,
    /// The diffusion probe never crossed the threshold.
    ProbeDidNotSettle { substeps: u64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
            Error::EventOutOfBounds { index, x, y } => {
                write!(f, "event {index} at (x={x}, y={y}) lies outside the frame")
            }
            Error::ShapeMismatch => f.write_str("frame geometries do not match"),
            Error::ProbeDidNotSettle { substeps } => {
                write!(
                    f,
                    "probe blob stayed above threshold after {substeps} substeps"
                )
            }
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
