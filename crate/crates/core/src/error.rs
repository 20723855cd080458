use thiserror::Error;

/// Everything that can go wrong in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("singular input: {0}")]
    SingularInput(String),

    #[error("point {re} + {im}i lies on the spectral support; square-root branch is ambiguous")]
    BranchAmbiguity { re: f64, im: f64 },

    #[error("implicit equation did not converge (last residual {residual:e})")]
    SolverFailure { residual: f64 },

    #[error("boundary extrapolation at {point} is unstable (spread {spread:e})")]
    UnstableBoundary { point: f64, spread: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate null space: {0}")]
    DegenerateNullSpace(String),

    #[error("evaluation point {re} + {im}i is within {distance:e} of an atom")]
    Pole { re: f64, im: f64, distance: f64 },

    #[error("near-singular resolvent denominator |D| = {0:e}")]
    NearSingular(f64),

    #[error("density {density:e} below bulk guard {threshold:e}; point too close to a spectral edge")]
    EdgeProximity { density: f64, threshold: f64 },

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("trial {trial}: degenerate-sample resample limit ({limit}) exceeded")]
    ResampleLimit { trial: u64, limit: usize },

    #[error("step size fell below dt_min at t = {t}; closest eigenvalue gap {gap:e}")]
    Stiffness { t: f64, gap: f64 },

    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch { expected: (usize, usize), found: (usize, usize) },

    #[error("quadrature failed: {0}")]
    Quadrature(String),

    #[error("linear algebra failure: {0}")]
    LinAlg(String),

    #[error("matrix file: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by the caller's parameters rather than by numerics.
    pub fn is_parameter_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_)
                | Error::DegenerateNullSpace(_)
                | Error::ShapeMismatch { .. }
                | Error::Parse(_)
                | Error::Io(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
