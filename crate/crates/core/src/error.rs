//! Crate-wide error type.

/// Errors surfaced by band construction and its numerical kernels.
#[derive(Debug, Clone, thiserror::Error)]
pub enum CalibError {
    /// A parameter lies outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// An observation violates the support of the chosen family.
    #[error("support violation: {0}")]
    Support(String),
    /// Inconsistent or malformed arguments (length mismatches and the like).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// An iterative solver exhausted its iteration budget.
    #[error("no convergence: {0}")]
    NonConvergence(String),
}

pub type Result<T> = std::result::Result<T, CalibError>;
