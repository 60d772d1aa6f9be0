use thiserror::Error;

/// Every failure the library reports. The variant decides the CLI exit code.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// The operation was called in a way its contract does not allow.
    #[error("usage error: {0}")]
    Usage(String),
    /// A numerical procedure failed (quadrature, step underflow, ...).
    #[error("numerical error: {0}")]
    Numerical(String),
    /// A Monte Carlo estimate could not be formed from the samples.
    #[error("statistical error: {0}")]
    Statistical(String),
    /// Invalid configuration: names the offending key.
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Usage(_) => "usage",
            Error::Numerical(_) => "numerical",
            Error::Statistical(_) => "statistical",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
        }
    }

    /// Process exit code: 2 config/usage/domain, 3 numerical, 4 statistical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_) | Error::Usage(_) | Error::Config(_) | Error::Io(_) => 2,
            Error::Numerical(_) => 3,
            Error::Statistical(_) => 4,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

macro_rules! ensure {
    ($cond:expr, $variant:ident, $($fmt:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err($crate::error::Error::$variant(format!($($fmt)+)));
        }
    };
}
pub(crate) use ensure;
