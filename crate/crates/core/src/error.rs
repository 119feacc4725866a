use alloc::string::String;
use alloc::vec::Vec;

/// Errors raised by the simulation library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument is outside the domain an operation accepts.
    #[error("invalid parameter: {0}")]
    Parameter(String),
    /// A mathematical function was evaluated outside its domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// A size guard was exceeded; the message names the alternative.
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    /// Input data is inconsistent with the object it is compared against.
    #[error("invalid data: {0}")]
    Data(String),
    /// A Monte Carlo procedure did not terminate within its horizon;
    /// `partial` holds whatever curve was measured up to that point.
    #[error("horizon of {horizon} steps exhausted")]
    Horizon { horizon: usize, partial: Vec<f64> },
}

pub type Result<T> = core::result::Result<T, Error>;

macro_rules! param_err {
    ($($arg:tt)*) => {
        $crate::error::Error::Parameter(alloc::format!($($arg)*))
    };
}

macro_rules! domain_err {
    ($($arg:tt)*) => {
        $crate::error::Error::Domain(alloc::format!($($arg)*))
    };
}

pub(crate) use domain_err;
pub(crate) use param_err;
