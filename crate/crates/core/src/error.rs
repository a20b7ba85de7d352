use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Where inside a stack an invariant was violated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Slice(usize),
    Cell { depth: usize, wavelength: usize },
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Slice(k) => write!(f, "slice {k}"),
            Location::Cell { depth, wavelength } => {
                write!(f, "cell (depth {depth}, wavelength {wavelength})")
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected_width}x{expected_height}, found {found_width}x{found_height}{}", at_suffix(.location))]
    DimensionMismatch {
        expected_width: usize,
        expected_height: usize,
        found_width: usize,
        found_height: usize,
        location: Option<Location>,
    },

    #[error("buffer of length {len} does not hold a {width}x{height} image")]
    BufferLength {
        width: usize,
        height: usize,
        len: usize,
    },

    #[error("non-finite value at row {row}, column {col}{}", at_suffix(.location))]
    NonFinite {
        row: usize,
        col: usize,
        location: Option<Location>,
    },

    #[error("duplicate depth index {index} at slice {slice}")]
    DuplicateDepth { index: usize, slice: usize },

    #[error("depth index {index} at slice {slice} is out of range for {count} slices")]
    DepthOutOfRange {
        index: usize,
        slice: usize,
        count: usize,
    },

    #[error("wavelength schedule is not strictly increasing at position {position}")]
    NonMonotoneWavelengths { position: usize },

    #[error("slice {slice} carries wavelength {found} nm but the schedule lists {expected} nm")]
    WavelengthMismatch {
        slice: usize,
        expected: f64,
        found: f64,
    },

    #[error("schedule length mismatch: {what} has {found} entries, expected {expected}")]
    ScheduleLength {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite objective after {iterations} iterations")]
    NonFiniteObjective { iterations: usize },

    #[error("LLT fit for depth {depth}, wavelength {wavelength} failed: {source}")]
    Fit {
        depth: usize,
        wavelength: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {message}", .path.display())]
    Decode { path: PathBuf, message: String },

    #[error("{}: {message}", .path.display())]
    Manifest { path: PathBuf, message: String },
}

fn at_suffix(location: &Option<Location>) -> String {
    match location {
        Some(loc) => format!(" at {loc}"),
        None => String::new(),
    }
}

impl Error {
    /// Stable machine-readable error kind, used on the command line.
    pub fn code(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } | Error::BufferLength { .. } => "dimension-mismatch",
            Error::NonFinite { .. } => "non-finite",
            Error::DuplicateDepth { .. } => "duplicate-depth",
            Error::DepthOutOfRange { .. } => "depth-out-of-range",
            Error::NonMonotoneWavelengths { .. } => "non-monotone-wavelengths",
            Error::WavelengthMismatch { .. } => "wavelength-mismatch",
            Error::ScheduleLength { .. } => "schedule-length",
            Error::InvalidParameter(_) => "invalid-parameter",
            Error::NonFiniteObjective { .. } => "non-finite-objective",
            Error::Fit { .. } => "fit-failed",
            Error::Io { .. } => "io",
            Error::Decode { .. } => "decode",
            Error::Manifest { .. } => "manifest",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn with_location(self, loc: Location) -> Self {
        match self {
            Error::DimensionMismatch {
                expected_width,
                expected_height,
                found_width,
                found_height,
                ..
            } => Error::DimensionMismatch {
                expected_width,
                expected_height,
                found_width,
                found_height,
                location: Some(loc),
            },
            Error::NonFinite { row, col, .. } => Error::NonFinite {
                row,
                col,
                location: Some(loc),
            },
            other => other,
        }
    }
}
