use thiserror::Error;

/// Errors raised while validating inputs or fitting models.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite value in {what} at row {row}, column {col}")]
    NonFinite {
        what: &'static str,
        row: usize,
        col: usize,
    },

    #[error("invalid group partition: {0}")]
    BadPartition(String),

    #[error("rank {rank} exceeds min(p, q) = {max}")]
    RankTooLarge { rank: usize, max: usize },

    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("predictor {index} has zero variance and no penalty curvature")]
    DegenerateColumn { index: usize },

    #[error("cross product Y'XC is identically zero")]
    ZeroCrossProduct,

    #[error("design block of group {group} is identically zero")]
    AllZeroBlock { group: usize },

    #[error("objective increased from {previous} to {current} at iteration {iteration}")]
    NonDecreasingObjective {
        iteration: usize,
        previous: f64,
        current: f64,
    },

    #[error("fold count {folds} is invalid for {n} observations")]
    BadFoldCount { folds: usize, n: usize },

    #[error("empty input: {0}")]
    EmptyInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
