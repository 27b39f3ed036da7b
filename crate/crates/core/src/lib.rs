//! Principal-component-guided sparse reduced-rank regression.
//!
//! Fits `Y ≈ X C Dᵀ` with a row-wise group-lasso penalty on `C`, a
//! per-group quadratic penalty that pulls coefficients toward each group's
//! leading principal directions, and `DᵀD = I`. Also provides the comparison
//! estimators (multivariate lasso / elastic net, sparse and elastic
//! reduced-rank regression), K-fold cross-validation, a synthetic data
//! generator and evaluation metrics.

pub mod baselines;
pub mod error;
pub mod experiment;
mod linalg;
pub mod metrics;
pub mod model;
pub mod penalty;
pub mod selection;
pub mod simgen;
pub mod solver;

pub use error::{Error, Result};
pub use model::{
    validate_inputs, Centering, DataPair, FactorPair, FitReport, GroupPartition,
    Hyperparameters, Matrix, Method, Problem, Vector,
};
pub use penalty::{build_penalty, build_penalty_set, group_svd, GroupSpectrum, PenaltySet};
pub use solver::{fit, predict, SolverConfig};
