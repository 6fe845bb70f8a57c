use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// One entry per violated scaling constraint, each quoting the inequality.
    #[error("scaling constraints violated: {}", .0.join("; "))]
    Constraint(Vec<String>),

    #[error("quadrature did not reach tolerance {tol:e} (estimate {estimate}, error {error:e})")]
    Quadrature { estimate: f64, error: f64, tol: f64 },

    #[error("outside admissible domain: {0}")]
    Domain(String),

    #[error("path has no interface (no sign change)")]
    NoInterface,

    #[error("perturbation outside tube: H1 norm {norm} exceeds {radius}")]
    OutOfTube { norm: f64, radius: f64 },

    #[error("perturbation not orthogonal to the slope of the profile (relative overlap {overlap:e})")]
    NotNormal { overlap: f64 },

    #[error("projection near caustic: denominator {denominator:e}")]
    NearCaustic { denominator: f64 },

    #[error("numerical failure: {message}")]
    Numeric { message: String, trace: Vec<f64> },

    #[error("integration blew up at t = {time} (max |u| = {max_abs})")]
    Instability { time: f64, max_abs: f64 },

    #[error("rung {rung} of the temperature ladder is degenerate (ESS {ess:.1}); refine the ladder")]
    RungRefinement { rung: usize, ess: f64 },

    #[error("integration box too small: boundary mass fraction {fraction:e}")]
    BoxTooSmall { fraction: f64 },

    #[error("chain aborted at step {step}: {reason}")]
    ChainAbort { step: usize, reason: String },
}

impl Error {
    pub(crate) fn numeric(message: impl Into<String>) -> Self {
        Error::Numeric { message: message.into(), trace: Vec::new() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
