use alloc::string::String;
use core::fmt;

/// Errors raised by operator construction, application and the spectral tools.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A parameter is outside its admissible range.
    InvalidArgument(String),
    /// A vector or matrix does not have the expected length.
    DimensionMismatch { expected: usize, found: usize },
    /// A dense materialization was requested above the configured cap.
    ResourceLimit { n: usize, cap: usize },
    /// A Cartesian node has no ray node close enough to interpolate from.
    Coverage { node: usize, distance: f64 },
    /// The QR iteration did not deflate an eigenvalue in time.
    EigenNoConvergence { index: usize, iterations: usize },
}

pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
        if expected == found {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected, found })
        }
    }

    pub(crate) fn check_cap(n: usize, cap: usize) -> Result<()> {
        if n <= cap {
            Ok(())
        } else {
            Err(Error::ResourceLimit { n, cap })
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::ResourceLimit { n, cap } => {
                write!(f, "dense size {n} exceeds the cap of {cap}")
            }
            Error::Coverage { node, distance } => write!(
                f,
                "cartesian node {node} is {distance:.3e} away from the nearest ray node"
            ),
            Error::EigenNoConvergence { index, iterations } => write!(
                f,
                "QR iteration failed to converge for eigenvalue {index} after {iterations} iterations"
            ),
        }
    }
}

impl core::error::Error for Error {}
