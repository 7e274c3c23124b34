use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A hyperedge, hypergraph or polynomial violates its structural invariants.
    #[error("structural error: {0}")]
    Structure(String),

    /// Matrix or vector dimensions disagree.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A vertex or mode index is outside `[0, n)`.
    #[error("index {index} out of range for {n} sites")]
    OutOfRange { index: usize, n: usize },

    /// The token sequence does not follow the translation-task grammar.
    #[error("grammar violation at token {index}: {reason}")]
    Grammar { index: usize, reason: String },

    /// An operation was requested on a site in the wrong state.
    #[error("precondition failed: {0}")]
    Precondition(String),

    /// A replayed record asks for an outcome with zero probability.
    #[error("inconsistent record at token {index}: {reason}")]
    InconsistentRecord { index: usize, reason: String },

    /// Exact enumeration would exceed the configured branch budget.
    #[error("enumeration infeasible: {0}")]
    Infeasible(String),

    /// A rational weight is not a multiple of `1/d`.
    #[error("weight {value} is not a multiple of 1/{denominator}")]
    Denominator { value: f64, denominator: i64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("serialization error: {0}")]
    Serde(String),

    /// The Lie-algebra basis is not closed under the bracket.
    #[error("basis is not closed: {0}")]
    NotClosed(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}
