use std::fmt;

/// Errors raised by path construction, maps, local-time estimation and the
/// moment oracles.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    /// A query fell outside the sampled window of an environment or map.
    #[error("extent error: {what} at {at} outside [{lo}, {hi}]")]
    Extent {
        what: &'static str,
        at: f64,
        lo: f64,
        hi: f64,
    },

    #[error("range error: {0} not in the range of the map")]
    Range(f64),

    /// An automatic extension loop ran out of budget.
    #[error("resource error: {0}")]
    Resource(String),

    #[error("lookup error: {0}")]
    Lookup(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// Quadrature did not reach the requested tolerance.
    #[error("accuracy error: requested {requested:e}, achieved {achieved:e}")]
    Accuracy { requested: f64, achieved: f64 },

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(msg: impl fmt::Display) -> Self {
        Error::Config(msg.to_string())
    }

    pub(crate) fn domain(msg: impl fmt::Display) -> Self {
        Error::Domain(msg.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
