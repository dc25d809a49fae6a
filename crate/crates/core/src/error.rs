use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("value of {what} overflows the floating range; use the log-domain variant")]
    Overflow { what: &'static str },

    #[error("{what} did not converge within {terms} terms")]
    NonConvergence { what: &'static str, terms: usize },

    #[error("required cap {required} exceeds the limit {limit}")]
    CapExceeded { required: usize, limit: usize },

    #[error("raising operator applied at the truncation cap {cap}")]
    CapBoundary { cap: usize },

    #[error("times out of order: s = {s} > t = {t}")]
    UnorderedTimes { s: f64, t: f64 },

    #[error("skew matrix has odd dimension {0}")]
    OddDimension(usize),

    #[error("duplicate point {0}")]
    DuplicatePoints(i64),

    #[error("matrix labeling is {found}, expected {expected}")]
    WrongLabeling {
        expected: &'static str,
        found: &'static str,
    },

    #[error("property ({index}) violated with residual {residual:e}")]
    PropertyViolated { index: u8, residual: f64 },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
