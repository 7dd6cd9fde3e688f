use thiserror::Error;

/// Errors raised by the disc construction and certificate routines.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("matrix {index} is not Hermitian: deviation {deviation:.3e} exceeds {tolerance:.3e}")]
    NonHermitianInput {
        index: usize,
        deviation: f64,
        tolerance: f64,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error(
        "no invertible direction found after {candidates} candidates \
         (best sigma_min {best_sigma_min:.3e} at {best:?}); this is not a proof of degeneracy"
    )]
    NoDirectionFound {
        candidates: usize,
        best: Vec<f64>,
        best_sigma_min: f64,
    },

    #[error("sum of b_j A_j is singular: sigma_min {sigma_min:.3e} <= {tolerance:.3e}")]
    SingularLeviDirection { sigma_min: f64, tolerance: f64 },

    #[error("fixed-point iteration did not converge after {iterations} steps (last step {last_step:.3e})")]
    NotConverged { iterations: usize, last_step: f64 },

    #[error("contractive solution has spectral norm {norm:.9} >= {limit:.9}")]
    NormTooLarge { norm: f64, limit: f64 },

    #[error("Stein operator not invertible: spectral radius {radius:.6} >= 1")]
    SpectralRadiusTooLarge { radius: f64 },

    #[error("factor B = A + PX is singular: sigma_min {sigma_min:.3e}")]
    SingularFactor { sigma_min: f64 },

    #[error("factorization residual {residual:.3e} exceeds {tolerance:.3e}")]
    FactorizationResidual { residual: f64, tolerance: f64 },

    #[error("linear system is singular ({0})")]
    SingularLinearSystem(String),

    #[error("|zeta| = {modulus} lies outside the closed unit disc")]
    OutsideClosedDisc { modulus: f64 },

    #[error("|zeta| = {modulus} is not on the unit circle")]
    NotOnBoundary { modulus: f64 },

    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("invalid input: {0}")]
    Input(String),
}

pub type Result<T> = std::result::Result<T, Error>;
