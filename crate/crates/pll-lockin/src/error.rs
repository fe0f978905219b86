//! Error type shared across the crate.

use thiserror::Error;

/// Everything that can go wrong while evaluating the model or running a solve.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Loop parameters violate their domain (tau1 <= 0, tau2 < 0, kvco <= 0,
    /// or a non-finite value).
    #[error("invalid loop parameters: {0}")]
    InvalidParameters(String),

    /// |omega| >= kvco: the vector field has no equilibria on the cylinder.
    #[error("no equilibria: |omega| = {omega:.6} >= kvco = {kvco:.6}")]
    NoEquilibria { omega: f64, kvco: f64 },

    /// A frequency argument lies outside the open interval required by the
    /// operation, e.g. omega not in (0, kvco).
    #[error("frequency out of range: omega = {omega:.6}, allowed {low:.6}..{high:.6}")]
    OutOfRange { omega: f64, low: f64, high: f64 },

    /// The asymmetry-based stability test needs tau2 > 0.
    #[error("stability condition inapplicable: tau2 = 0 (lag filter)")]
    ConditionInapplicable,

    /// A first-integral factor is exactly zero at the requested point, so the
    /// logarithmic form is undefined there.
    #[error("first integral singular at y = {y:.9}, theta_e = {theta_e:.9}")]
    SingularPoint { y: f64, theta_e: f64 },

    /// A factor changed sign between two points that a solve compares, so the
    /// two level values are not on the same continuous branch.
    #[error("first-integral factor changed sign during solve ({context})")]
    SignFlip { context: &'static str },

    /// A bracketed root search could not find a sign change.
    #[error("no sign change bracketed ({context})")]
    NoBracket { context: &'static str },

    /// The adaptive integrator drove the step size below the representable
    /// floor without meeting the error tolerance.
    #[error("step size underflow at t = {t:.9}")]
    StepUnderflow { t: f64 },

    /// A trajectory classification hit its integration budget before any
    /// decision rule fired.
    #[error("classification undecided within the integration budget (omega = {omega:.6})")]
    Undecided { omega: f64 },

    /// Bad CLI or config input.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// I/O failure while reading config or writing output.
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
