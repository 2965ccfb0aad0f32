use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Errors reported by the solvers and matrix constructors.
///
/// Indices are zero-based.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    NotSquare { rows: usize, cols: usize },
    DimensionMismatch { expected: usize, found: usize },
    /// Two diagonal entries are closer than the degeneracy tolerance.
    DegenerateDiagonal { i: usize, j: usize, gap: f64 },
    AnchorOutOfRange { anchor: usize, n: usize },
    IndexOutOfBounds { row: usize, col: usize },
    DuplicateEntry { row: usize, col: usize },
    OrderOverflow { requested: usize, available: usize },
    /// The seed basis is numerically singular or too badly conditioned to refine.
    SingularSeed { condition: f64 },
    SingularMatrix { pivot: usize },
    NoConvergence { iterations: usize },
    InvalidArgument(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::NotSquare { rows, cols } => write!(f, "matrix is not square ({rows}x{cols})"),
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::DegenerateDiagonal { i, j, gap } => write!(
                f,
                "degenerate diagonal: entries {} and {} differ by {gap:e}",
                i + 1,
                j + 1
            ),
            Error::AnchorOutOfRange { anchor, n } => {
                write!(f, "anchor index {anchor} out of range for dimension {n}")
            }
            Error::IndexOutOfBounds { row, col } => {
                write!(f, "entry ({}, {}) is out of bounds", row + 1, col + 1)
            }
            Error::DuplicateEntry { row, col } => {
                write!(f, "duplicate entry at ({}, {})", row + 1, col + 1)
            }
            Error::OrderOverflow { requested, available } => write!(
                f,
                "requested order {requested} but only {available} coefficients are available"
            ),
            Error::SingularSeed { condition } => {
                write!(f, "seed basis is singular (condition estimate {condition:e})")
            }
            Error::SingularMatrix { pivot } => write!(f, "matrix is singular at pivot {pivot}"),
            Error::NoConvergence { iterations } => {
                write!(f, "no convergence after {iterations} iterations")
            }
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
