use thiserror::Error;

/// Errors raised by the library. The CLI maps each variant family to an exit code.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error(
        "dimension hypothesis violated: domain dimension {d} is too large for target dimension {m}"
    )]
    HypothesisViolation { d: usize, m: usize },

    #[error("certification failed after {retries} retries (best margin {best_margin:e}); refine the mesh")]
    CertificationFailure { retries: usize, best_margin: f64 },

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("input is not Hermitian (residual {0:e})")]
    NotHermitian(f64),

    #[error("vector too close to the forbidden ray (distance {0:e})")]
    RayProximity(f64),

    #[error("zero vector has no rotation")]
    ZeroVector,

    #[error("matrix is too close to singular (smallest singular value {0:e})")]
    NearSingular(f64),

    #[error("spectral gap at 1/2 too small ({0:e})")]
    SpectralGap(f64),

    #[error("no free index: support bound {support} leaves no room in size {size}")]
    NoFreeIndex { support: usize, size: usize },

    #[error("Krylov family is rank deficient (smallest singular value {0:e})")]
    NotCyclic(f64),

    #[error("eigenvalue iteration did not converge")]
    NoConvergence,

    #[error("malformed input: {0}")]
    Malformed(String),
}

impl Error {
    /// True for errors that signal an unmet precondition of an operation.
    pub fn is_precondition(&self) -> bool {
        matches!(
            self,
            Error::Precondition(_)
                | Error::HypothesisViolation { .. }
                | Error::NotHermitian(_)
                | Error::RayProximity(_)
                | Error::ZeroVector
                | Error::NearSingular(_)
                | Error::NoFreeIndex { .. }
                | Error::NotCyclic(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
