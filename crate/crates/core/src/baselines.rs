//! Comparison estimators.
//!
//! - MLasso: `½‖Y − XB‖²_F + λ Σ‖B_i‖₂`
//! - MElastic: `½‖Y − XB‖²_F + λ(α Σ‖B_i‖₂ + (1−α)/2 ‖B‖²_F)`
//! - SRRR: the reduced-rank fit with one group and `θ = 0`
//! - ERRR: `½‖Y − XCDᵀ‖²_F + λ(α Σ‖C_i‖₂ + (1−α)/2 ‖C‖²_F)`, `DᵀD = I`
//!
//! The full-rank estimators run the same coordinate sweep with `D = I_q`
//! held fixed, so their row update is
//! `B_i = (1 − λα/‖x_iᵀR_i‖)₊ x_iᵀR_i / (x_iᵀx_i + λ(1−α))`.

use crate::error::Result;
use crate::model::{
    validate_inputs, DataPair, FactorPair, FitReport, GroupPartition, Hyperparameters, Matrix,
    Method,
};
use crate::penalty::{build_penalty_set, PenaltySet, DEFAULT_RANK_TOLERANCE};
use crate::solver::{self, initial_d, Engine, RowRule, SolverConfig};

/// Dispatches to the estimator for `method`.
pub fn fit_method(
    method: Method,
    data: &DataPair,
    groups: &GroupPartition,
    hp: &Hyperparameters,
    config: &SolverConfig,
) -> Result<FitReport> {
    fit_method_from(method, data, groups, None, hp, config, None)
}

/// Like [`fit_method`], with optional precomputed penalty matrices (used by
/// the proposed method when `θ > 0`) and an optional warm start.
pub fn fit_method_from(
    method: Method,
    data: &DataPair,
    groups: &GroupPartition,
    penalty: Option<&PenaltySet>,
    hp: &Hyperparameters,
    config: &SolverConfig,
    start: Option<&FactorPair>,
) -> Result<FitReport> {
    match method {
        Method::Proposed => {
            validate_inputs(data, groups, hp)?;
            let built;
            let penalty = match penalty {
                Some(given) if hp.theta > 0.0 => given,
                _ => {
                    built = if hp.theta > 0.0 {
                        build_penalty_set(data, groups, DEFAULT_RANK_TOLERANCE)?
                    } else {
                        PenaltySet::zeros(groups)
                    };
                    &built
                }
            };
            solver::fit_with_penalty_from(data, groups, penalty, hp, config, start)
        }
        Method::MLasso => {
            let hp = Hyperparameters { alpha: 1.0, ..*hp };
            full_rank_fit(Method::MLasso, data, hp, config, start)
        }
        Method::MElastic => full_rank_fit(Method::MElastic, data, *hp, config, start),
        Method::Srrr => srrr_from(data, hp, config, start),
        Method::Errr => errr_from(data, hp, config, start),
    }
}

fn full_rank_fit(
    method: Method,
    data: &DataPair,
    hp: Hyperparameters,
    config: &SolverConfig,
    start: Option<&FactorPair>,
) -> Result<FitReport> {
    let groups = GroupPartition::single(data.p());
    let check = Hyperparameters { rank: 1, ..hp };
    validate_inputs(data, &groups, &check)?;
    let engine = Engine {
        data,
        groups: &groups,
        rule: RowRule::Elastic {
            lambda: hp.lambda,
            alpha: hp.alpha,
        },
        method,
        hyperparameters: Hyperparameters {
            rank: data.q(),
            theta: 0.0,
            ..hp
        },
        config: *config,
        fixed_d: true,
    };
    engine.start(start, || Matrix::identity(data.q(), data.q()))
}

/// Multivariate (row-wise group) lasso. `B` is returned as `factors.c` with
/// `factors.d = I_q`.
pub fn mlasso_fit(data: &DataPair, hp: &Hyperparameters, config: &SolverConfig) -> Result<FitReport> {
    let groups = GroupPartition::single(data.p());
    fit_method(Method::MLasso, data, &groups, hp, config)
}

/// Multivariate elastic net.
pub fn melastic_fit(
    data: &DataPair,
    hp: &Hyperparameters,
    config: &SolverConfig,
) -> Result<FitReport> {
    full_rank_fit(Method::MElastic, data, *hp, config, None)
}

/// Sparse reduced-rank regression: the reduced-rank fit with every predictor
/// in one group and no principal-component term.
pub fn srrr_fit(data: &DataPair, hp: &Hyperparameters, config: &SolverConfig) -> Result<FitReport> {
    srrr_from(data, hp, config, None)
}

fn srrr_from(
    data: &DataPair,
    hp: &Hyperparameters,
    config: &SolverConfig,
    start: Option<&FactorPair>,
) -> Result<FitReport> {
    let groups = GroupPartition::single(data.p());
    let hp = Hyperparameters {
        theta: 0.0,
        alpha: 1.0,
        ..*hp
    };
    let mut report = solver::fit_with_penalty_from(
        data,
        &groups,
        &PenaltySet::zeros(&groups),
        &hp,
        config,
        start,
    )?;
    report.method = Method::Srrr;
    Ok(report)
}

/// Elastic-net reduced-rank regression.
pub fn errr_fit(data: &DataPair, hp: &Hyperparameters, config: &SolverConfig) -> Result<FitReport> {
    errr_from(data, hp, config, None)
}

fn errr_from(
    data: &DataPair,
    hp: &Hyperparameters,
    config: &SolverConfig,
    start: Option<&FactorPair>,
) -> Result<FitReport> {
    let groups = GroupPartition::single(data.p());
    let hp = Hyperparameters { theta: 0.0, ..*hp };
    validate_inputs(data, &groups, &hp)?;
    let engine = Engine {
        data,
        groups: &groups,
        rule: RowRule::Elastic {
            lambda: hp.lambda,
            alpha: hp.alpha,
        },
        method: Method::Errr,
        hyperparameters: hp,
        config: *config,
        fixed_d: false,
    };
    engine.start(start, || initial_d(data, hp.rank, config.seed))
}

/// Objective of a fitted report under its own method's penalty, evaluated
/// from scratch.
pub fn method_objective(report: &FitReport, data: &DataPair, groups: &GroupPartition) -> Result<f64> {
    let hp = report.hyperparameters;
    Ok(match report.method {
        Method::Proposed => {
            let penalty = if hp.theta > 0.0 {
                build_penalty_set(data, groups, DEFAULT_RANK_TOLERANCE)?
            } else {
                PenaltySet::zeros(groups)
            };
            solver::objective(data, groups, &penalty, &report.factors, &hp)
        }
        Method::Srrr | Method::MLasso => {
            let single = GroupPartition::single(data.p());
            let rule = RowRule::Elastic {
                lambda: hp.lambda,
                alpha: 1.0,
            };
            solver::rule_objective(data, &single, &rule, &report.factors)
        }
        Method::MElastic | Method::Errr => {
            let single = GroupPartition::single(data.p());
            let rule = RowRule::Elastic {
                lambda: hp.lambda,
                alpha: hp.alpha,
            };
            solver::rule_objective(data, &single, &rule, &report.factors)
        }
    })
}
