use thiserror::Error;

/// Errors raised across the simulator and the numerical routines.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// Input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A swap touched a guard cell: the truncation margin was too small.
    #[error("window violation at time {time:.6} on bond ({site}, {})", site + 1)]
    WindowViolation { time: f64, site: i64 },

    /// A numerical routine could not certify its declared tolerance.
    #[error("numerical non-convergence: {0}")]
    NonConvergence(String),

    /// A structural assumption (e.g. a single discrepancy) was broken.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn nonconvergence(msg: impl Into<String>) -> Self {
        Error::NonConvergence(msg.into())
    }

    pub fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    /// Process exit status associated with this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_) => 2,
            Error::NonConvergence(_) => 3,
            Error::WindowViolation { .. } => 4,
            Error::Contract(_) => 1,
            Error::Io(_) => 2,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
