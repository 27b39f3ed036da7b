//! Replication driver for simulation studies: generate, cross-validate each
//! method on the training data, refit, and score against the truth.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::metrics::{mse_b, mse_y, mspe, tpr_tnr, EvalRecord};
use crate::model::Method;
use crate::selection::{cross_validate, refit_chosen, CvPlan};
use crate::simgen::{generate, replication_seed, Scenario, SimulatedData};
use crate::solver::{predict, SolverConfig};

/// Scores one method on one simulated data set. The plan's rank grid is
/// replaced by the true rank.
pub fn evaluate_method(
    sim: &SimulatedData,
    scenario: &Scenario,
    replication: usize,
    method: Method,
    plan: &CvPlan,
    config: &SolverConfig,
) -> Result<EvalRecord> {
    let plan = CvPlan {
        rank_grid: vec![scenario.r_true],
        ..plan.clone()
    };
    let cv = cross_validate(&sim.train, &sim.groups, &plan, method, config)?;
    let (report, train) = refit_chosen(&sim.train, &sim.groups, &plan, &cv, config)?;
    let (tpr, tnr) = tpr_tnr(&report.active_rows, &sim.truth.nonzero_rows, scenario.p);
    let predicted = predict(sim.test.x(), &report.factors, train.centering())?;
    Ok(EvalRecord {
        scenario: scenario.label(),
        method,
        replication,
        mse_b: Some(mse_b(&report.factors, &sim.truth.factors)?),
        mse_y: Some(mse_y(sim.test.x(), &report.factors, &sim.truth.factors)?),
        tpr: Some(tpr),
        tnr: Some(tnr),
        mspe: Some(mspe(sim.test.y(), &predicted)?),
    })
}

/// A failed replication, with the cell it belongs to.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("scenario {scenario}, replication {replication}, method {method}: {source}")]
pub struct StudyFailure {
    pub scenario: String,
    pub replication: usize,
    pub method: MethodLabel,
    pub source: Error,
}

/// The failing method, or none when data generation itself failed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MethodLabel(pub Option<Method>);

impl std::fmt::Display for MethodLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.0 {
            Some(m) => write!(f, "{m}"),
            None => f.write_str("(generation)"),
        }
    }
}

/// Records for `methods` on replication `replication` of a scenario, in
/// method order. The data seed is `replication_seed(base_seed,
/// scenario_index, replication)` and the fold seed is derived from it.
pub fn run_replication(
    scenario: &Scenario,
    scenario_index: usize,
    replication: usize,
    base_seed: u64,
    methods: &[Method],
    plan: &CvPlan,
    config: &SolverConfig,
) -> std::result::Result<Vec<EvalRecord>, StudyFailure> {
    let fail = |method: Option<Method>, source: Error| StudyFailure {
        scenario: scenario.label(),
        replication,
        method: MethodLabel(method),
        source,
    };
    let seed = replication_seed(base_seed, scenario_index, replication);
    let sim = generate(scenario, seed).map_err(|e| fail(None, e))?;
    let plan = CvPlan {
        seed,
        ..plan.clone()
    };
    methods
        .iter()
        .map(|&m| {
            evaluate_method(&sim, scenario, replication, m, &plan, config)
                .map_err(|e| fail(Some(m), e))
        })
        .collect()
}

/// Runs `replications` replications of each scenario. Output order is
/// scenario, replication, method regardless of scheduling.
pub fn run_study(
    scenarios: &[(usize, Scenario)],
    replications: usize,
    base_seed: u64,
    methods: &[Method],
    plan: &CvPlan,
    config: &SolverConfig,
) -> std::result::Result<Vec<EvalRecord>, StudyFailure> {
    let jobs: Vec<(usize, Scenario, usize)> = scenarios
        .iter()
        .flat_map(|&(idx, s)| (0..replications).map(move |r| (idx, s, r)))
        .collect();
    let results: Vec<_> = jobs
        .par_iter()
        .map(|&(idx, s, r)| run_replication(&s, idx, r, base_seed, methods, plan, config))
        .collect();
    let mut records = Vec::new();
    for r in results {
        records.extend(r?);
    }
    Ok(records)
}
