use std::fmt;

/// Errors raised by constructors and solvers.
///
/// Variants carry the offending quantity so callers (and the CLI) can emit
/// machine-readable reports.
#[derive(Debug, Clone)]
pub enum Error {
    Dimension {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    SpaceMismatch {
        what: &'static str,
    },
    NotHermitian {
        deviation: f64,
    },
    NotPositiveDefinite {
        min_eigenvalue: f64,
    },
    NotRealValued {
        max_imaginary: f64,
    },
    NotSelfAdjoint {
        deviation: f64,
    },
    IndefiniteEigenvalue {
        eigenvalue: f64,
    },
    NotCoercive {
        alpha: f64,
    },
    NotContractive {
        norm: f64,
    },
    NotDissipative {
        bound: f64,
    },
    NotAdmissible {
        violation: f64,
    },
    OutOfSubspace {
        what: &'static str,
        residual: f64,
    },
    FormNotCoercive {
        bound: f64,
    },
    SingularSystem {
        what: &'static str,
        smallest_singular_value: f64,
    },
    Invalid {
        what: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Dimension {
                what,
                expected,
                found,
            } => write!(f, "{what}: expected dimension {expected}, found {found}"),
            Error::SpaceMismatch { what } => {
                write!(f, "{what}: operands live in different inner-product spaces")
            }
            Error::NotHermitian { deviation } => {
                write!(f, "matrix is not Hermitian (relative deviation {deviation:.3e})")
            }
            Error::NotPositiveDefinite { min_eigenvalue } => write!(
                f,
                "matrix is not positive definite (smallest eigenvalue {min_eigenvalue:.3e})"
            ),
            Error::NotRealValued { max_imaginary } => write!(
                f,
                "real scalar field declared but entries have imaginary part up to {max_imaginary:.3e}"
            ),
            Error::NotSelfAdjoint { deviation } => {
                write!(f, "operator is not self-adjoint (deviation {deviation:.3e})")
            }
            Error::IndefiniteEigenvalue { eigenvalue } => write!(
                f,
                "operator is not positive semidefinite (eigenvalue {eigenvalue:.3e})"
            ),
            Error::NotCoercive { alpha } => {
                write!(f, "operator is not coercive (coercivity constant {alpha:.3e})")
            }
            Error::NotContractive { norm } => {
                write!(f, "map violates the contraction invariant (operator norm {norm:.6})")
            }
            Error::NotDissipative { bound } => write!(
                f,
                "operator is not dissipative (max Re<Bx,x>/|x|^2 = {bound:.3e})"
            ),
            Error::NotAdmissible { violation } => write!(
                f,
                "subspace is not admissible (boundary form reaches {violation:.3e})"
            ),
            Error::OutOfSubspace { what, residual } => {
                write!(f, "{what}: vector lies outside the required subspace (residual {residual:.3e})")
            }
            Error::FormNotCoercive { bound } => write!(
                f,
                "restricted form is not coercive on the test subspace (bound {bound:.3e})"
            ),
            Error::SingularSystem {
                what,
                smallest_singular_value,
            } => write!(
                f,
                "{what}: system is numerically singular (smallest singular value {smallest_singular_value:.3e})"
            ),
            Error::Invalid { what } => write!(f, "{what}"),
        }
    }
}

impl std::error::Error for Error {}
