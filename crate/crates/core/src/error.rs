use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// No p-values were supplied.
    EmptySample,
    /// A p-value outside `[0, 1]` (or NaN).
    OutOfRange { index: usize, value: f64 },
    /// Evaluation point outside `[0, 1]`.
    InvalidTime(f64),
    /// Target level outside `[0, 1]`.
    InvalidAlpha(f64),
    /// Tuning parameter outside `[0, 1)`.
    InvalidLambda(f64),
    /// Boundary rule needs `0 < kappa < tau < 1`.
    InvalidBoundary { kappa: f64, tau: f64 },
    /// Estimated proportion outside `[0, 1]`.
    InvalidPi0(f64),
    /// Unparseable estimator selection.
    InvalidSpec(String),
    /// Invalid grid step for the brute-force oracle.
    InvalidStep(f64),
    /// Invalid exhaustion tolerance.
    InvalidTolerance(f64),
    /// Invalid trace resolution.
    InvalidSamples(usize),
    /// Counterexamples need at least four distinct p-values.
    CounterexampleSize(usize),
    /// The summary does not satisfy the downward-jump premises at `j0`.
    JumpPremise { j0: usize, reason: &'static str },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::EmptySample => write!(f, "empty p-value sample"),
            Error::OutOfRange { index, value } => {
                write!(
                    f,
                    "p-value at index {index} is out of range [0, 1]: {value}"
                )
            }
            Error::InvalidTime(t) => write!(f, "evaluation point {t} is outside [0, 1]"),
            Error::InvalidAlpha(a) => write!(f, "alpha {a} is outside [0, 1]"),
            Error::InvalidLambda(l) => write!(f, "lambda {l} is outside [0, 1)"),
            Error::InvalidBoundary { kappa, tau } => {
                write!(
                    f,
                    "boundary rule needs 0 < kappa < tau < 1, got ({kappa}, {tau})"
                )
            }
            Error::InvalidPi0(v) => write!(f, "pi0 estimate {v} is outside [0, 1]"),
            Error::InvalidSpec(s) => write!(f, "invalid pi0 specification: {s}"),
            Error::InvalidStep(s) => write!(f, "grid step {s} must lie in (0, 1e-3]"),
            Error::InvalidTolerance(t) => write!(f, "tolerance {t} must be positive"),
            Error::InvalidSamples(n) => write!(f, "samples per segment must be >= 1, got {n}"),
            Error::CounterexampleSize(n) => {
                write!(
                    f,
                    "counterexample needs at least 4 distinct values, got {n}"
                )
            }
            Error::JumpPremise { j0, reason } => {
                write!(f, "downward-jump premise fails at j0 = {j0}: {reason}")
            }
        }
    }
}

impl core::error::Error for Error {}
