use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Broad classification used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    /// Inputs outside an operation's domain, failed solvers, failed certificates.
    Numeric,
    /// A configured size or memory budget would be exceeded.
    Budget,
    /// Cache files that cannot be read or written.
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{op}: domain violation: {detail}")]
    Domain { op: &'static str, detail: String },

    #[error("{op}: x = {x} exceeds the configured maximum {max}")]
    Budget { op: &'static str, x: u64, max: u64 },

    #[error("segment [{lo}, {hi}) has {len} entries, budget is {budget}")]
    SegmentBudget { lo: u64, hi: u64, len: u64, budget: u64 },

    #[error("n = {n} lies outside segment [{lo}, {hi})")]
    OutOfSegment { n: u64, lo: u64, hi: u64 },

    #[error("{op}: u = {u} beyond table range [0, {u_max}]")]
    TableRange { op: &'static str, u: f64, u_max: f64 },

    #[error("{op}: no convergence: {detail}")]
    Convergence { op: &'static str, detail: String },

    #[error(
        "quadrature: tolerance {requested:e} not reached (error estimate {estimate:e} after {evaluations} evaluations)"
    )]
    Tolerance {
        requested: f64,
        estimate: f64,
        evaluations: usize,
    },

    #[error("dickman table: residual {achieved:e} exceeds {limit:e} at degree {degree}")]
    Residual { achieved: f64, limit: f64, degree: usize },

    #[error("{op}: intermediate value exceeds 64-bit range")]
    Overflow { op: &'static str },

    #[error("cache i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error("cache format: {0}")]
    Format(String),
}

impl Error {
    pub(crate) fn domain(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            op,
            detail: detail.into(),
        }
    }

    pub fn category(&self) -> Category {
        match self {
            Error::Budget { .. } | Error::SegmentBudget { .. } => Category::Budget,
            Error::Io(_) | Error::Format(_) => Category::Io,
            _ => Category::Numeric,
        }
    }
}
