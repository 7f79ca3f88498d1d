//! Error type shared by every module of the toolkit.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A scalar argument violates a precondition (nonpositive hbar, negative
    /// weight, bad exponent range, ...).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A constructed state fails to decay below the boundary threshold.
    #[error("boundary decay violated: edge magnitude {edge:.3e} exceeds {threshold:.3e}")]
    BoundaryDecay { edge: f64, threshold: f64 },

    /// A field or profile is not resolved by the grid it lives on.
    #[error("under-resolved: {0}")]
    Resolution(String),

    /// A time step fails the phase-sampling restriction of an integrator.
    #[error("time step too large: {msg} (suggested dt <= {suggested_dt:.3e})")]
    Stability { msg: String, suggested_dt: f64 },

    /// Two discrete representations that must agree do not.
    #[error("discretization inconsistency: {0}")]
    Inconsistency(String),

    /// Input does not satisfy the hypotheses of the diagnostic being run.
    #[error("hypothesis violated: {0}")]
    HypothesisViolation(String),

    /// A supplied source decomposition does not reproduce the target field.
    #[error("invalid decomposition: residual {residual:.3e} exceeds tolerance {tol:.3e}")]
    InvalidDecomposition { residual: f64, tol: f64 },

    /// Declared metadata (sup norm, Lipschitz constant) contradicts samples.
    #[error("metadata violated: {0}")]
    Metadata(String),

    /// The fluid density fell below the vacuum floor during integration.
    #[error("vacuum reached at t = {t:.6}: min density {min_rho:.3e} below floor {floor:.3e}")]
    Vacuum { t: f64, min_rho: f64, floor: f64 },

    /// A field norm grew past the blow-up detector threshold.
    #[error("blow-up detected at t = {t:.6}: field norm {norm:.3e}")]
    BlowUp { t: f64, norm: f64 },

    /// Expression parsing failed.
    #[error("parse error at column {column}: {msg}")]
    Parse { column: usize, msg: String },

    /// Experiment configuration is malformed.
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
