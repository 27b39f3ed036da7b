//! K-fold cross-validated grid search.
//!
//! Every training fold is centered on its own means and, for the proposed
//! method, gets its own penalty matrices; validation rows never enter either.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{fit_method, fit_method_from};
use crate::error::{Error, Result};
use crate::metrics::{mean_se, mspe};
use crate::model::{DataPair, FitReport, GroupPartition, Hyperparameters, Matrix, Method};
use crate::penalty::{build_penalty_set, PenaltySet, DEFAULT_RANK_TOLERANCE};
use crate::solver::{initial_d, predict, SolverConfig};

/// Smallest grid value relative to the largest.
pub const LAMBDA_MIN_RATIO: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LambdaGrid {
    /// Log-spaced from the smallest all-zero λ down by [`LAMBDA_MIN_RATIO`].
    Auto { size: usize },
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvPlan {
    pub folds: usize,
    pub lambda_grid: LambdaGrid,
    pub theta_grid: Vec<f64>,
    pub alpha_grid: Vec<f64>,
    pub rank_grid: Vec<usize>,
    pub seed: u64,
    /// Center each training fold (and the final refit).
    pub center: bool,
    /// Start each fit on a λ path from the previous solution instead of
    /// from the standard initialization.
    pub warm_start: bool,
}

impl Default for CvPlan {
    fn default() -> Self {
        Self {
            folds: 5,
            lambda_grid: LambdaGrid::Auto { size: 30 },
            theta_grid: vec![0.0, 1e-3, 3e-3, 1e-2, 3e-2, 0.1, 1.0],
            alpha_grid: vec![0.2, 0.5, 0.8],
            rank_grid: vec![1],
            seed: 0,
            center: true,
            warm_start: true,
        }
    }
}

impl CvPlan {
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.folds < 2 || self.folds > n {
            return Err(Error::BadFoldCount {
                folds: self.folds,
                n,
            });
        }
        let empty = |name: &str| Err(Error::EmptyInput(format!("{name} grid is empty")));
        match &self.lambda_grid {
            LambdaGrid::Auto { size: 0 } => return empty("lambda"),
            LambdaGrid::Explicit(v) if v.is_empty() => return empty("lambda"),
            _ => {}
        }
        if self.theta_grid.is_empty() {
            return empty("theta");
        }
        if self.alpha_grid.is_empty() {
            return empty("alpha");
        }
        if self.rank_grid.is_empty() {
            return empty("rank");
        }
        Ok(())
    }
}

/// One point of the hyperparameter grid.
pub type CvCell = Hyperparameters;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellScore {
    pub cell: CvCell,
    /// Mean over folds of the held-out MSE (entrywise); infinite if any fold
    /// failed.
    pub mean_error: f64,
    pub se: f64,
    pub fold_errors: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub method: Method,
    pub table: Vec<CellScore>,
    /// Index into `table` of the selected cell.
    pub chosen: usize,
}

impl CvResult {
    pub fn chosen_cell(&self) -> &CvCell {
        &self.table[self.chosen].cell
    }

    pub fn chosen_score(&self) -> &CellScore {
        &self.table[self.chosen]
    }
}

/// Fold label for each of `n` observations. Sizes differ by at most one.
pub fn make_folds(n: usize, folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds < 2 || folds > n {
        return Err(Error::BadFoldCount { folds, n });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut labels = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        labels[i] = pos % folds;
    }
    Ok(labels)
}

fn log_grid(top: f64, size: usize) -> Vec<f64> {
    if size == 1 {
        return vec![top];
    }
    let step = LAMBDA_MIN_RATIO.ln() / (size - 1) as f64;
    (0..size)
        .map(|k| if k == 0 { top } else { top * (step * k as f64).exp() })
        .collect()
}

fn max_row_norm(target: &Matrix, x: &Matrix) -> f64 {
    x.column_iter()
        .map(|c| target.tr_mul(&c).norm())
        .fold(0.0, f64::max)
}

/// `max_i ‖x_iᵀ Y D⁽⁰⁾‖₂`: the smallest λ at which the reduced-rank fit from
/// its standard start keeps every row at zero.
pub fn reduced_rank_lambda_max(data: &DataPair, rank: usize, seed: u64) -> f64 {
    let target = data.y() * initial_d(data, rank, seed);
    max_row_norm(&target, data.x())
}

/// `max_i ‖x_iᵀ Y‖₂`: the all-zero threshold of the full-rank lasso.
pub fn full_rank_lambda_max(data: &DataPair) -> f64 {
    max_row_norm(data.y(), data.x())
}

/// Descending log-spaced λ grid for the reduced-rank estimators.
pub fn default_lambda_grid(data: &DataPair, rank: usize, size: usize) -> Vec<f64> {
    log_grid(reduced_rank_lambda_max(data, rank, 0), size.max(1))
}

/// λ grid for a method at a given α and rank. The group-lasso part of the
/// penalty is weighted by α, so the top of the grid scales by `1/α`.
pub fn lambda_grid_for(
    method: Method,
    data: &DataPair,
    alpha: f64,
    rank: usize,
    size: usize,
    seed: u64,
) -> Vec<f64> {
    let base = if method.is_reduced_rank() {
        reduced_rank_lambda_max(data, rank, seed)
    } else {
        full_rank_lambda_max(data)
    };
    let top = if method.uses_alpha() && alpha > 0.0 {
        base / alpha
    } else {
        base
    };
    log_grid(top, size.max(1))
}

/// Cartesian product of the grids relevant to `method`, λ outermost
/// (descending within each (α, rank) pair).
pub fn grid_cells(
    method: Method,
    data: &DataPair,
    plan: &CvPlan,
    seed: u64,
) -> Vec<CvCell> {
    let thetas: &[f64] = if method.uses_theta() {
        &plan.theta_grid
    } else {
        &[0.0]
    };
    let alphas: &[f64] = if method.uses_alpha() {
        &plan.alpha_grid
    } else {
        &[1.0]
    };
    let ranks: Vec<usize> = if method.is_reduced_rank() {
        plan.rank_grid.clone()
    } else {
        vec![data.q()]
    };
    let mut cells = Vec::new();
    for &rank in &ranks {
        for &alpha in alphas {
            let lambdas = match &plan.lambda_grid {
                LambdaGrid::Explicit(v) => v.clone(),
                LambdaGrid::Auto { size } => {
                    lambda_grid_for(method, data, alpha, rank.min(data.p()).min(data.q()), *size, seed)
                }
            };
            for &lambda in &lambdas {
                for &theta in thetas {
                    cells.push(Hyperparameters {
                        lambda,
                        theta,
                        alpha,
                        rank,
                    });
                }
            }
        }
    }
    cells
}

/// Training and validation material for one fold.
#[derive(Debug, Clone)]
pub struct FoldData {
    pub train_rows: Vec<usize>,
    pub valid_rows: Vec<usize>,
    /// Training rows, centered on their own means when the plan asks for it.
    pub train: DataPair,
    /// Raw validation data.
    pub valid: DataPair,
    /// Penalty matrices from the training rows only (present when needed).
    pub penalty: Option<std::result::Result<PenaltySet, Error>>,
}

/// Splits `data` into folds, centering and building penalties per fold.
pub fn prepare_folds(
    data: &DataPair,
    groups: &GroupPartition,
    plan: &CvPlan,
    with_penalty: bool,
) -> Result<Vec<FoldData>> {
    let labels = make_folds(data.n(), plan.folds, plan.seed)?;
    (0..plan.folds)
        .map(|f| {
            let train_rows: Vec<usize> = (0..data.n()).filter(|&i| labels[i] != f).collect();
            let valid_rows: Vec<usize> = (0..data.n()).filter(|&i| labels[i] == f).collect();
            let raw = data.select_rows(&train_rows)?;
            let train = if plan.center { raw.center_columns() } else { raw };
            let valid = data.select_rows(&valid_rows)?;
            let penalty =
                with_penalty.then(|| build_penalty_set(&train, groups, DEFAULT_RANK_TOLERANCE));
            Ok(FoldData {
                train_rows,
                valid_rows,
                train,
                valid,
                penalty,
            })
        })
        .collect()
}

/// Held-out errors along one λ path on one fold, each fit warm-started from
/// the previous one when the plan asks for it.
fn score_path(
    method: Method,
    fold: &FoldData,
    groups: &GroupPartition,
    path: &[CvCell],
    warm_start: bool,
    config: &SolverConfig,
) -> Vec<Result<f64>> {
    let penalty = match &fold.penalty {
        Some(Err(e)) if method == Method::Proposed && path.iter().any(|c| c.theta > 0.0) => {
            return path.iter().map(|_| Err(e.clone())).collect();
        }
        Some(Ok(p)) => Some(p),
        _ => None,
    };
    let mut previous: Option<FitReport> = None;
    path.iter()
        .map(|cell| {
            let start = if warm_start {
                previous.as_ref().map(|r| &r.factors)
            } else {
                None
            };
            let outcome =
                fit_method_from(method, &fold.train, groups, penalty, cell, config, start);
            let report = match outcome {
                Ok(r) => r,
                Err(e) => {
                    previous = None;
                    return Err(e);
                }
            };
            let score = predict(fold.valid.x(), &report.factors, fold.train.centering())
                .and_then(|pred| mspe(fold.valid.y(), &pred));
            previous = Some(report);
            score
        })
        .collect()
}

/// Picks the cell with the lowest mean error; ties go to larger λ, then
/// larger θ, then the earlier cell.
fn choose(table: &[CellScore]) -> usize {
    let mut best = 0;
    for (i, s) in table.iter().enumerate().skip(1) {
        let b = &table[best];
        let better = s.mean_error < b.mean_error
            || (s.mean_error == b.mean_error
                && (s.cell.lambda > b.cell.lambda
                    || (s.cell.lambda == b.cell.lambda && s.cell.theta > b.cell.theta)));
        if better {
            best = i;
        }
    }
    best
}

/// Runs the grid search for `method`. λ grids are derived from the (centered)
/// full data; everything fitted is derived from training folds only.
pub fn cross_validate(
    data: &DataPair,
    groups: &GroupPartition,
    plan: &CvPlan,
    method: Method,
    config: &SolverConfig,
) -> Result<CvResult> {
    plan.validate(data.n())?;
    if groups.len() != data.p() {
        return Err(Error::BadPartition(format!(
            "partition covers {} predictors but X has {} columns",
            groups.len(),
            data.p()
        )));
    }
    let reference = if plan.center {
        data.center_columns()
    } else {
        data.clone()
    };
    let cells = grid_cells(method, &reference, plan, config.seed);
    let needs_penalty = method == Method::Proposed && cells.iter().any(|c| c.theta > 0.0);
    let folds = prepare_folds(data, groups, plan, needs_penalty)?;

    // Cells sharing (rank, α, θ) form one λ path per fold.
    let mut paths: Vec<Vec<usize>> = Vec::new();
    for (i, c) in cells.iter().enumerate() {
        let same = |j: &usize| {
            let o = &cells[*j];
            o.rank == c.rank && o.alpha == c.alpha && o.theta == c.theta
        };
        match paths.iter_mut().find(|p| same(&p[0])) {
            Some(p) => p.push(i),
            None => paths.push(vec![i]),
        }
    }
    let jobs: Vec<(usize, usize)> = (0..folds.len())
        .flat_map(|f| (0..paths.len()).map(move |k| (f, k)))
        .collect();
    let results: Vec<Vec<Result<f64>>> = jobs
        .par_iter()
        .map(|&(f, k)| {
            let path: Vec<CvCell> = paths[k].iter().map(|&i| cells[i]).collect();
            score_path(method, &folds[f], groups, &path, plan.warm_start, config)
        })
        .collect();
    let mut outcomes: Vec<Vec<Option<Result<f64>>>> =
        cells.iter().map(|_| (0..folds.len()).map(|_| None).collect()).collect();
    for (&(f, k), scores) in jobs.iter().zip(results) {
        for (&i, score) in paths[k].iter().zip(scores) {
            outcomes[i][f] = Some(score);
        }
    }

    let table: Vec<CellScore> = cells
        .iter()
        .zip(outcomes)
        .map(|(cell, per_fold)| {
            let per_fold: Vec<Result<f64>> = per_fold
                .into_iter()
                .map(|o| o.expect("every (cell, fold) pair is scored"))
                .collect();
            let failure = per_fold
                .iter()
                .enumerate()
                .find_map(|(f, o)| o.as_ref().err().map(|e| format!("fold {}: {e}", f + 1)));
            let fold_errors: Vec<f64> = per_fold
                .into_iter()
                .map(|o| o.unwrap_or(f64::INFINITY))
                .collect();
            let (mean_error, se) = if failure.is_some() {
                (f64::INFINITY, f64::INFINITY)
            } else {
                let s = mean_se(&fold_errors).expect("at least two folds");
                (s.mean, s.se)
            };
            CellScore {
                cell: *cell,
                mean_error,
                se,
                fold_errors,
                failure,
            }
        })
        .collect();
    let chosen = choose(&table);
    Ok(CvResult {
        method,
        table,
        chosen,
    })
}

/// Refits the chosen cell on all of `data` (centered if the plan centers).
pub fn refit_chosen(
    data: &DataPair,
    groups: &GroupPartition,
    plan: &CvPlan,
    cv: &CvResult,
    config: &SolverConfig,
) -> Result<(FitReport, DataPair)> {
    let train = if plan.center {
        data.center_columns()
    } else {
        data.clone()
    };
    let report = fit_method(cv.method, &train, groups, cv.chosen_cell(), config)?;
    Ok((report, train))
}
