use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Two objects were built on different measure spaces.
    #[error("objects belong to different measure spaces")]
    SpaceMismatch,

    /// A lattice limit did not settle inside the evaluated window.
    #[error("window too short: {0}")]
    WindowTooShort(String),

    /// A Young function failed the numerical Δ₂ certificate.
    #[error("Young function {phi} fails the delta-2 certificate (witness ratio {witness})")]
    Delta2Failed { phi: String, witness: f64 },

    /// An inequality that must hold was violated beyond its tolerance.
    #[error("{check} violated: lhs {lhs} > rhs {rhs}")]
    BoundViolation { check: &'static str, lhs: f64, rhs: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
