use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// `aligned_difference` called with `i == j` or an index out of range.
    InvalidPair { i: usize, j: usize, p: usize },
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    InvalidParameter {
        name: &'static str,
        reason: String,
    },
    /// A column with zero variance cannot be standardized or regressed on.
    ZeroVariance { column: usize },
    NonFinite { what: &'static str },
    NotPositiveDefinite { min_eigenvalue: f64 },
    /// FISTA produced a non-finite objective, usually a bad step size.
    Divergence { iteration: usize },
    DegenerateGrid,
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidPair { i, j, p } => {
                write!(f, "invalid variable pair ({i}, {j}) for p = {p}")
            }
            Error::DimensionMismatch {
                what,
                expected,
                found,
            } => write!(f, "dimension mismatch for {what}: expected {expected}, found {found}"),
            Error::InvalidParameter { name, reason } => write!(f, "invalid {name}: {reason}"),
            Error::ZeroVariance { column } => {
                write!(f, "column {column} has zero variance")
            }
            Error::NonFinite { what } => write!(f, "non-finite value in {what}"),
            Error::NotPositiveDefinite { min_eigenvalue } => write!(
                f,
                "matrix is not positive definite (smallest eigenvalue {min_eigenvalue:e})"
            ),
            Error::Divergence { iteration } => write!(
                f,
                "proximal gradient diverged at iteration {iteration} (non-finite objective)"
            ),
            Error::DegenerateGrid => write!(f, "regularization grid is empty or not strictly monotone"),
        }
    }
}

impl core::error::Error for Error {}
