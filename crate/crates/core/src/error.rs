use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A sector descriptor that cannot be realized on the requested lattice.
    InvalidSector(String),
    /// A site, spin or factor index outside its valid range.
    OutOfRange {
        what: &'static str,
        index: usize,
        bound: usize,
    },
    /// Hopping was requested between sites that are not nearest neighbours.
    NotAdjacent {
        from: usize,
        to: usize,
    },
    InvalidParameter(String),
    /// Operator or density-matrix dimension above the configured cap.
    DimensionTooLarge {
        dim: usize,
        cap: usize,
        hint: &'static str,
    },
    LengthMismatch {
        expected: usize,
        found: usize,
    },
    InvalidOccupation(String),
    /// The Krylov solver stopped before reaching the residual tolerance.
    NotConverged {
        energy: f64,
        residual: f64,
        iterations: usize,
    },
    /// The outer shift iteration did not settle.
    ShiftNotConverged {
        iterations: usize,
        last_mean: f64,
    },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidSector(msg) => write!(f, "invalid sector: {msg}"),
            Error::OutOfRange { what, index, bound } => {
                write!(f, "{what} index {index} out of range (bound {bound})")
            }
            Error::NotAdjacent { from, to } => {
                write!(f, "sites {from} and {to} are not nearest neighbours")
            }
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::DimensionTooLarge { dim, cap, hint } => {
                write!(f, "dimension {dim} exceeds cap {cap}; {hint}")
            }
            Error::LengthMismatch { expected, found } => {
                write!(f, "vector length {found} does not match dimension {expected}")
            }
            Error::InvalidOccupation(msg) => write!(f, "invalid occupation: {msg}"),
            Error::NotConverged { energy, residual, iterations } => write!(
                f,
                "Lanczos did not converge after {iterations} matvecs (energy {energy}, residual {residual:e})"
            ),
            Error::ShiftNotConverged { iterations, last_mean } => {
                write!(f, "shift iteration did not converge after {iterations} outer steps (|<b>| = {last_mean:e})")
            }
        }
    }
}

impl core::error::Error for Error {}
