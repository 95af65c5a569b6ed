use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A parameter is outside its admissible range.
    InvalidParameter {
        name: &'static str,
        reason: &'static str,
    },
    /// Two grids that must share a lattice side do not.
    SizeMismatch { expected: usize, found: usize },
    /// A Liouville weight is zero, negative or not finite.
    BadWeight { index: usize, value: f64 },
    /// Conjugate gradients hit the iteration cap before reaching tolerance.
    CgNotConverged { iterations: usize, residual: f64 },
    /// A Crank–Nicolson step failed; `step` is the iteration being computed.
    StepFailed { step: usize, source: alloc::boxed::Box<Error> },
    /// A snapshot dipped below the allowed negative undershoot.
    PositivityViolation { step: usize, min: f64, max: f64 },
    /// An analysis had too little data to produce an answer.
    InsufficientData(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter { name, reason } => {
                write!(f, "invalid parameter `{name}`: {reason}")
            }
            Error::SizeMismatch { expected, found } => {
                write!(f, "lattice side mismatch: expected {expected}, found {found}")
            }
            Error::BadWeight { index, value } => {
                write!(f, "liouville weight at site {index} is {value}, must be finite and > 0")
            }
            Error::CgNotConverged { iterations, residual } => write!(
                f,
                "conjugate gradients did not converge in {iterations} iterations \
                 (relative residual {residual:e})"
            ),
            Error::StepFailed { step, source } => {
                write!(f, "crank-nicolson step {step} failed: {source}")
            }
            Error::PositivityViolation { step, min, max } => write!(
                f,
                "heat profile at step {step} has minimum {min:e} below tolerance (max {max:e})"
            ),
            Error::InsufficientData(what) => write!(f, "insufficient data: {what}"),
        }
    }
}

impl core::error::Error for Error {
    fn source(&self) -> Option<&(dyn core::error::Error + 'static)> {
        match self {
            Error::StepFailed { source, .. } => Some(source.as_ref()),
            _ => None,
        }
    }
}

impl Error {
    /// True for failures of the numerical scheme itself (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::CgNotConverged { .. }
            | Error::PositivityViolation { .. }
            | Error::BadWeight { .. }
            | Error::InsufficientData(_) => true,
            Error::StepFailed { source, .. } => source.is_numerical(),
            Error::InvalidParameter { .. } | Error::SizeMismatch { .. } => false,
        }
    }
}
