use core::fmt;

/// Errors raised by the numerical core.
#[derive(Clone, Debug, PartialEq)]
pub enum CoreError {
    /// An argument lies outside the domain of the operation.
    Domain(&'static str),
    /// Two inputs disagree in dimension (`expected`, `found`).
    DimensionMismatch { expected: usize, found: usize },
    /// A matrix that must be positive semidefinite has a negative eigenvalue.
    NotPositiveSemidefinite { min_eigenvalue: f64, trace: f64 },
    /// Adaptive quadrature hit its subdivision limit.
    QuadratureDiverged { achieved: f64, requested: f64 },
    /// Iterative eigen-solver did not converge.
    EigenNoConvergence,
}

pub type CoreResult<T> = Result<T, CoreError>;

impl fmt::Display for CoreError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoreError::Domain(what) => write!(f, "domain error: {what}"),
            CoreError::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            CoreError::NotPositiveSemidefinite { min_eigenvalue, trace } => {
                write!(f, "matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e}, trace {trace:e})")
            }
            CoreError::QuadratureDiverged { achieved, requested } => {
                write!(f, "quadrature did not converge: achieved error {achieved:e}, requested {requested:e}")
            }
            CoreError::EigenNoConvergence => f.write_str("symmetric eigen-solver did not converge"),
        }
    }
}

impl core::error::Error for CoreError {}
