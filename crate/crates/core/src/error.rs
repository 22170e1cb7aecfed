use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum PercolabError {
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("dimension mismatch: expected (k={k}, d={d}), got ({got_k}, {got_d})")]
    DimensionMismatch {
        k: usize,
        d: usize,
        got_k: usize,
        got_d: usize,
    },

    #[error("invalid box: {0}")]
    InvalidBox(String),

    #[error("site {0} lies outside the box")]
    OutsideBox(String),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("enumeration cap exceeded: {edges} edges > cap {cap}")]
    CapExceeded { edges: usize, cap: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("no n0 qualifies: shell {shell} has upper value {value} >= lambda {lambda}")]
    NoQualifyingN0 { shell: usize, value: f64, lambda: f64 },

    #[error("nonpositive mass m = {m}: margin delta too large for lambda and n0")]
    NonPositiveMass { m: f64 },

    #[error("nonpositive summability margin delta = {0}")]
    NonPositiveMargin(f64),

    #[error("no tabulated L satisfies gamma_L + 2 stderr < alpha = {alpha}")]
    NoQualifyingL0 { alpha: f64 },

    #[error("insufficient signal for a fit: {0}")]
    InsufficientSignal(String),

    #[error("empty search set: {0}")]
    EmptySearchSet(String),
}

pub type Result<T, E = PercolabError> = std::result::Result<T, E>;
