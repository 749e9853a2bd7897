use thiserror::Error;

/// Errors raised across the simulator.
#[derive(Debug, Error)]
pub enum IsacError {
    /// A configuration value violates a documented constraint.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// An index (subcarrier, rank, antenna) is outside its valid range.
    #[error("index out of range: {0}")]
    Index(String),

    /// A physical quantity is outside the domain of a formula.
    #[error("domain error: {0}")]
    Domain(String),

    /// Matrix or list shapes do not agree.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Full enumeration was requested for a candidate set larger than the budget.
    #[error("{count} candidates exceed the enumeration budget of {budget}; use --mode gss or --mode sequential")]
    Budget { count: String, budget: u64 },

    /// A dataset directory is malformed.
    #[error("dataset format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, IsacError>;
