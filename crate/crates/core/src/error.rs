use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A caller broke an operation's precondition.
    Contract(String),
    DimensionMismatch {
        expected: usize,
        found: usize,
    },
    /// Cholesky hit a non-positive pivot; `pivot` is the row in the
    /// caller's (unpermuted) numbering.
    NotSpd {
        pivot: usize,
    },
    PencilNotDefinite,
    EigenNoConvergence,
    /// The saddle-point system of a subdomain is singular, or the subdomain
    /// has no coarse degrees of freedom at all.
    InsufficientCoarseDofs {
        subdomain: usize,
    },
    /// Pair eigenproblem failed for the face shared by subdomains `s` and `t`.
    PairPencil {
        s: usize,
        t: usize,
    },
    SingularOperator,
    RankDeficientBasis,
    /// Recurrence residual claimed convergence but the true residual is off
    /// by more than a factor of ten.
    ResidualGap {
        true_residual: f64,
        threshold: f64,
    },
    SingularMatrix,
    Cfl {
        dt: f64,
        limit: f64,
    },
    NotConverged {
        iterations: usize,
        residual: f64,
    },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Contract(msg) => write!(f, "contract violation: {msg}"),
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::NotSpd { pivot } => write!(f, "matrix not SPD (pivot {pivot})"),
            Error::PencilNotDefinite => write!(f, "pencil not definite"),
            Error::EigenNoConvergence => write!(f, "symmetric eigensolver did not converge"),
            Error::InsufficientCoarseDofs { subdomain } => {
                write!(f, "insufficient coarse dofs in subdomain {subdomain}")
            }
            Error::PairPencil { s, t } => {
                write!(f, "pencil not definite for face pair ({s}, {t})")
            }
            Error::SingularOperator => write!(f, "singular operator: no Dirichlet condition"),
            Error::RankDeficientBasis => write!(f, "rank-deficient deflation basis"),
            Error::ResidualGap {
                true_residual,
                threshold,
            } => write!(
                f,
                "true residual {true_residual:e} exceeds 10x the stopping threshold {threshold:e}"
            ),
            Error::SingularMatrix => write!(f, "singular matrix"),
            Error::Cfl { dt, limit } => write!(f, "time step {dt} violates CFL limit {limit}"),
            Error::NotConverged {
                iterations,
                residual,
            } => write!(
                f,
                "no convergence after {iterations} iterations (residual {residual:e})"
            ),
        }
    }
}

impl core::error::Error for Error {}

pub(crate) fn contract(msg: impl Into<String>) -> Error {
    Error::Contract(msg.into())
}

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
