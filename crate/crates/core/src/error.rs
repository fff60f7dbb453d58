use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Everything the numerical core can refuse to do.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A scalar argument is outside its domain.
    Domain {
        what: &'static str,
        value: f64,
    },
    /// The topology does not have the shape an operation needs.
    Arity {
        operation: &'static str,
        expected: &'static str,
        transmitters: usize,
        receivers: usize,
    },
    /// Two containers that must agree in size do not.
    Shape {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    /// Two receivers listen for the same molecule type.
    DuplicateMoleculeType(String),
    /// Conditional means are ordered the wrong way round (`a1 < a0`).
    MisorderedMeans {
        a0: f64,
        a1: f64,
    },
    EmptyInput(&'static str),
    /// Brute-force enumeration would exceed its point budget.
    GridTooLarge {
        points: u128,
        limit: u128,
    },
    NonFiniteObjective,
    /// Scenario validation failure, with the offending field path.
    Invalid {
        path: String,
        message: String,
    },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain { what, value } => write!(f, "{what} out of domain: {value}"),
            Error::Arity {
                operation,
                expected,
                transmitters,
                receivers,
            } => write!(
                f,
                "{operation} needs {expected}, got {transmitters} transmitter(s) x {receivers} receiver(s)"
            ),
            Error::Shape {
                what,
                expected,
                found,
            } => write!(f, "{what}: expected {expected}, found {found}"),
            Error::DuplicateMoleculeType(name) => {
                write!(f, "molecule type `{name}` is used by more than one receiver")
            }
            Error::MisorderedMeans { a0, a1 } => {
                write!(f, "mean given bit 1 ({a1}) is below mean given bit 0 ({a0})")
            }
            Error::EmptyInput(what) => write!(f, "{what} must not be empty"),
            Error::GridTooLarge { points, limit } => {
                write!(f, "allocation grid has {points} points, limit is {limit}")
            }
            Error::NonFiniteObjective => write!(f, "objective is not finite"),
            Error::Invalid { path, message } => write!(f, "{path}: {message}"),
        }
    }
}

impl core::error::Error for Error {}

pub(crate) fn positive(what: &'static str, value: f64) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Domain { what, value })
    }
}

pub(crate) fn nonnegative(what: &'static str, value: f64) -> Result<f64> {
    if value >= 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Domain { what, value })
    }
}

pub(crate) fn probability(what: &'static str, value: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(Error::Domain { what, value })
    }
}
