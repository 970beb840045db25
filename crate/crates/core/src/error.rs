use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BalanceError {
    /// Malformed or non-finite input data.
    #[error("input error: {0}")]
    Input(String),
    /// A matrix that must be full rank / positive definite is not.
    #[error("degenerate matrix: {0}")]
    Degenerate(String),
    /// Invalid parameter or configuration.
    #[error("configuration error: {0}")]
    Config(String),
    /// The problem violates the balancing hypotheses, or a constraint
    /// system that should have a null space does not.
    #[error("infeasible: {0}")]
    Infeasible(String),
    /// Some top eigenspace has dimension >= k, which only happens when the
    /// corresponding ratio is already below 1/k.
    #[error("already balanced: {0}")]
    AlreadyBalanced(String),
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, BalanceError>;
