use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: String,
        found: String,
    },

    #[error("invalid MDP: {0}")]
    InvalidMdp(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid policy: action {action} at state {state} (n_actions = {n_actions})")]
    InvalidPolicy {
        state: usize,
        action: usize,
        n_actions: usize,
    },

    #[error("linear system is numerically singular (pivot {pivot} at column {column})")]
    Singular { column: usize, pivot: f64 },

    #[error("linear solve residual {residual:e} exceeds tolerance {tolerance:e}")]
    SolveResidual { residual: f64, tolerance: f64 },

    #[error("value iteration hit the cap of {iterations} iterations with residual {residual:e}")]
    IterationCap { iterations: usize, residual: f64 },

    #[error("invalid Garnet spec: branching {branching} must lie in 1..={n_states}")]
    InvalidGarnet { branching: usize, n_states: usize },

    #[error("ledger would need about {estimate} bytes, above the cap of {cap} bytes")]
    LedgerTooLarge { estimate: u64, cap: u64 },

    #[error("index {index} out of range for ledger of length {len}")]
    LedgerIndex { index: usize, len: usize },

    #[error("concentrability is infinite: nu vanishes at ({state}, {action}) where d_pi,mu > 0")]
    InfiniteConcentrability { state: usize, action: usize },

    #[error("policy enumeration over {count} policies exceeds the limit of {limit}")]
    EnumerationTooLarge { count: f64, limit: u64 },

    #[error("argument out of domain: {0}")]
    Domain(String),
}

pub(crate) fn dims(what: &'static str, expected: (usize, usize), found: (usize, usize)) -> Error {
    Error::DimensionMismatch {
        what,
        expected: format!("{}x{}", expected.0, expected.1),
        found: format!("{}x{}", found.0, found.1),
    }
}
