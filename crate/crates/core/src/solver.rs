//! Alternating estimation of `C` and `D`.
//!
//! With `D` fixed and orthonormal, `½‖Y − XCDᵀ‖²_F = const + ½‖YD − XC‖²_F`,
//! so each row of `C` has a closed-form group-soft-threshold update given the
//! other rows (cyclic coordinate descent, rows updated in place). With `C`
//! fixed, the best orthonormal `D` solves an orthogonal Procrustes problem on
//! `M = YᵀXC`.
//!
//! The working residual `YD − XC` is kept up to date after every row update
//! and recomputed from scratch after every `D` update.

use nalgebra::RowDVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{complete_orthonormal, numerical_rank, standard_basis, thin_svd};
use crate::model::{
    validate_inputs, Centering, DataPair, FactorPair, FitReport, GroupPartition, Hyperparameters,
    Matrix, Method, Vector,
};
use crate::penalty::{build_penalty_set, PenaltySet, DEFAULT_RANK_TOLERANCE};

/// Row updates whose denominator falls below this are treated as degenerate.
pub const DEGENERATE_DENOMINATOR: f64 = 1e-14;

/// Allowed objective increase between outer iterations (round-off only).
pub const DESCENT_SLACK: f64 = 1e-9;

/// Singular values of `YᵀXC` below this fraction of the largest are treated
/// as zero when completing the Procrustes solution.
const PROCRUSTES_RANK_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub max_outer_iterations: usize,
    /// Stop once `|f_prev − f| ≤ tol · |f_prev|`.
    pub objective_tolerance: f64,
    /// Coordinate-descent passes over all rows per outer iteration.
    pub inner_sweeps: usize,
    /// Only used to complete `D⁽⁰⁾` when `YᵀX` has rank below `r`.
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_outer_iterations: 500,
            objective_tolerance: 1e-8,
            inner_sweeps: 1,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_outer_iterations == 0 {
            return Err(Error::InvalidConfig("max_outer_iterations must be >= 1".into()));
        }
        if self.objective_tolerance.is_nan() || self.objective_tolerance < 0.0 {
            return Err(Error::InvalidConfig("objective_tolerance must be >= 0".into()));
        }
        if self.inner_sweeps == 0 {
            return Err(Error::InvalidConfig("inner_sweeps must be >= 1".into()));
        }
        Ok(())
    }
}

/// How a single row of `C` is penalized.
#[derive(Debug, Clone, Copy)]
pub(crate) enum RowRule<'a> {
    /// Group lasso plus the principal-component quadratic penalty.
    Principal {
        lambda: f64,
        theta: f64,
        penalty: &'a PenaltySet,
    },
    /// Group lasso weighted by `α` plus a ridge term weighted by `1 − α`.
    Elastic { lambda: f64, alpha: f64 },
}

impl RowRule<'_> {
    fn threshold(&self) -> f64 {
        match *self {
            RowRule::Principal { lambda, .. } => lambda,
            RowRule::Elastic { lambda, alpha } => lambda * alpha,
        }
    }

    fn curvature(&self, predictor: usize) -> f64 {
        match *self {
            RowRule::Principal { theta, penalty, .. } => theta * penalty.diagonal()[predictor],
            RowRule::Elastic { lambda, alpha } => lambda * (1.0 - alpha),
        }
    }

    /// Penalty part of the objective.
    fn value(&self, c: &Matrix, groups: &GroupPartition) -> f64 {
        let row_norms: f64 = c.row_iter().map(|r| r.norm()).sum();
        match *self {
            RowRule::Principal {
                lambda,
                theta,
                penalty,
            } => {
                let mut quad = 0.0;
                if theta != 0.0 {
                    for k in 0..groups.num_groups() {
                        let ck = c.select_rows(groups.members(k));
                        quad += (ck.transpose() * penalty.matrix(k) * &ck).trace();
                    }
                }
                lambda * row_norms + 0.5 * theta * quad
            }
            RowRule::Elastic { lambda, alpha } => {
                lambda * (alpha * row_norms + 0.5 * (1.0 - alpha) * c.norm_squared())
            }
        }
    }
}

/// Working variables of the alternating solver.
#[derive(Debug, Clone)]
pub struct SolverState {
    c: Matrix,
    d: Matrix,
    /// `YD − XC`.
    residual: Matrix,
    col_sq_norms: Vec<f64>,
}

impl SolverState {
    pub fn new(data: &DataPair, c: Matrix, d: Matrix) -> Result<Self> {
        if c.nrows() != data.p() || d.nrows() != data.q() || c.ncols() != d.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "C is {}x{}, D is {}x{} for p = {}, q = {}",
                c.nrows(),
                c.ncols(),
                d.nrows(),
                d.ncols(),
                data.p(),
                data.q()
            )));
        }
        let col_sq_norms = data.x().column_iter().map(|c| c.norm_squared()).collect();
        let residual = data.y() * &d - data.x() * &c;
        Ok(Self {
            c,
            d,
            residual,
            col_sq_norms,
        })
    }

    pub fn c(&self) -> &Matrix {
        &self.c
    }

    pub fn d(&self) -> &Matrix {
        &self.d
    }

    /// The cached `YD − XC`.
    pub fn residual(&self) -> &Matrix {
        &self.residual
    }

    pub fn factors(&self) -> FactorPair {
        FactorPair {
            c: self.c.clone(),
            d: self.d.clone(),
        }
    }

    /// Replaces `D` and recomputes the residual from scratch.
    pub fn set_d(&mut self, data: &DataPair, d: Matrix) {
        self.d = d;
        self.refresh(data);
    }

    fn refresh(&mut self, data: &DataPair) {
        self.residual = data.y() * &self.d - data.x() * &self.c;
    }

    /// Computes the minimizing row for predictor `i` given all other rows.
    /// `ac` caches `A⁽ᵏ⁾C⁽ᵏ⁾` per group when the rule has a quadratic term.
    fn propose_row(
        &self,
        i: usize,
        data: &DataPair,
        groups: &GroupPartition,
        rule: &RowRule<'_>,
        ac: Option<&[Matrix]>,
    ) -> Result<RowDVector<f64>> {
        let x_i = data.x().column(i);
        let xtx = self.col_sq_norms[i];
        // x_iᵀQ_i, with Q_i the residual that excludes row i's own contribution
        let mut v: RowDVector<f64> = (self.residual.tr_mul(&x_i)).transpose();
        v += self.c.row(i) * xtx;
        if let RowRule::Principal { theta, penalty, .. } = *rule {
            if theta != 0.0 {
                // θs_i with s_i = A_i C⁽ᵏ⁾ − A_ii C_i
                let k = groups.group_of(i);
                let local = groups.local_index(i);
                let a = penalty.matrix(k);
                let a_ii = a[(local, local)];
                match ac {
                    Some(ac) => {
                        let ac_i = ac[k].row(local);
                        for col in 0..v.len() {
                            v[col] -= theta * (ac_i[col] - a_ii * self.c[(i, col)]);
                        }
                    }
                    None => {
                        for (l, &j) in groups.members(k).iter().enumerate() {
                            if l != local {
                                let w = theta * a[(local, l)];
                                for col in 0..v.len() {
                                    v[col] -= w * self.c[(j, col)];
                                }
                            }
                        }
                    }
                }
            }
        }
        let denom = xtx + rule.curvature(i);
        if denom <= DEGENERATE_DENOMINATOR {
            return Err(Error::DegenerateColumn { index: i });
        }
        let norm = v.norm();
        let thr = rule.threshold();
        if norm <= thr || norm == 0.0 {
            return Ok(RowDVector::zeros(v.len()));
        }
        Ok(v * ((1.0 - thr / norm) / denom))
    }

    /// Writes row `i` and returns the change `new − old` as a column, or
    /// `None` if the row is unchanged.
    fn set_row(&mut self, i: usize, data: &DataPair, row: RowDVector<f64>) -> Option<Vector> {
        let delta: Vector = (&row - self.c.row(i)).transpose();
        if delta.iter().all(|v| *v == 0.0) {
            return None;
        }
        self.residual.ger(-1.0, &data.x().column(i), &delta, 1.0);
        self.c.set_row(i, &row);
        Some(delta)
    }

    /// One or more Gauss–Seidel passes over all groups and rows. Returns the
    /// predictors whose rows were forced to zero as degenerate.
    fn sweep(
        &mut self,
        data: &DataPair,
        groups: &GroupPartition,
        rule: &RowRule<'_>,
        sweeps: usize,
    ) -> Vec<usize> {
        let penalty = match *rule {
            RowRule::Principal { theta, penalty, .. } if theta != 0.0 => Some(penalty),
            _ => None,
        };
        let mut ac: Option<Vec<Matrix>> = penalty.map(|pen| {
            (0..groups.num_groups())
                .map(|k| pen.matrix(k) * self.c.select_rows(groups.members(k)))
                .collect()
        });
        let mut degenerate = Vec::new();
        for _ in 0..sweeps {
            for k in 0..groups.num_groups() {
                for (local, &i) in groups.members(k).iter().enumerate() {
                    let row = match self.propose_row(i, data, groups, rule, ac.as_deref()) {
                        Ok(row) => row,
                        Err(_) => {
                            if !degenerate.contains(&i) {
                                degenerate.push(i);
                            }
                            RowDVector::zeros(self.c.ncols())
                        }
                    };
                    if let Some(delta) = self.set_row(i, data, row) {
                        if let (Some(ac), Some(pen)) = (ac.as_mut(), penalty) {
                            ac[k].ger(1.0, &pen.matrix(k).column(local), &delta, 1.0);
                        }
                    }
                }
            }
        }
        degenerate.sort_unstable();
        degenerate
    }
}

/// Closed-form update of row `i` of `C` given the current state.
///
/// Returns [`Error::DegenerateColumn`] when `x_iᵀx_i + θA_ii` vanishes; the
/// sweep then forces the row to zero.
pub fn update_c_row(
    i: usize,
    state: &SolverState,
    data: &DataPair,
    groups: &GroupPartition,
    penalty: &PenaltySet,
    hp: &Hyperparameters,
) -> Result<RowDVector<f64>> {
    let rule = RowRule::Principal {
        lambda: hp.lambda,
        theta: hp.theta,
        penalty,
    };
    state.propose_row(i, data, groups, &rule, None)
}

/// `sweeps` full coordinate passes over `C` with `D` held fixed. Returns the
/// predictors flagged as degenerate.
pub fn update_c(
    state: &mut SolverState,
    data: &DataPair,
    groups: &GroupPartition,
    penalty: &PenaltySet,
    hp: &Hyperparameters,
    sweeps: usize,
) -> Vec<usize> {
    let rule = RowRule::Principal {
        lambda: hp.lambda,
        theta: hp.theta,
        penalty,
    };
    state.sweep(data, groups, &rule, sweeps)
}

/// Orthonormal `D` maximizing `tr((YᵀXC)ᵀD)`.
///
/// When `M = YᵀXC` has rank `h < r` the singular bases are completed to `r`
/// orthonormal columns, which leaves the attained trace unchanged.
pub fn update_d(data: &DataPair, c: &Matrix) -> Result<Matrix> {
    let m = data.y().tr_mul(&(data.x() * c));
    procrustes(&m)
}

/// `argmax tr(MᵀD)` subject to `DᵀD = I` for `M` of shape q×r, q ≥ r.
pub fn procrustes(m: &Matrix) -> Result<Matrix> {
    let (q, r) = m.shape();
    if r > q {
        return Err(Error::DimensionMismatch(format!(
            "Procrustes target is {q}x{r}; need at least as many rows as columns"
        )));
    }
    if m.iter().all(|v| *v == 0.0) {
        return Err(Error::ZeroCrossProduct);
    }
    let (u, sv, v_t) = thin_svd(m);
    let h = numerical_rank(&sv, PROCRUSTES_RANK_TOL);
    if h == r {
        return Ok(u * v_t);
    }
    let u_full = complete_orthonormal(&u.columns(0, h).into_owned(), r, standard_basis(q));
    let v_full = complete_orthonormal(&v_t.rows(0, h).transpose(), r, standard_basis(r));
    Ok(u_full * v_full.transpose())
}

/// `D⁽⁰⁾`: the top-`r` left singular vectors of `YᵀX`, completed with seeded
/// random directions if that matrix has rank below `r`.
pub fn initial_d(data: &DataPair, rank: usize, seed: u64) -> Matrix {
    let yx = data.y().tr_mul(data.x());
    let (u, sv, _) = thin_svd(&yx);
    let h = numerical_rank(&sv, DEFAULT_RANK_TOLERANCE).min(rank);
    if h == rank {
        return u.columns(0, rank).into_owned();
    }
    let q = data.q();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let candidates = std::iter::repeat_with(move || {
        Vector::from_fn(q, |_, _| StandardNormal.sample(&mut rng))
    });
    complete_orthonormal(&u.columns(0, h).into_owned(), rank, candidates)
}

/// Objective value `½‖Y − XCDᵀ‖²_F + λ Σ‖C_i‖₂ + (θ/2) Σ_k tr(C⁽ᵏ⁾ᵀA⁽ᵏ⁾C⁽ᵏ⁾)`.
pub fn objective(
    data: &DataPair,
    groups: &GroupPartition,
    penalty: &PenaltySet,
    factors: &FactorPair,
    hp: &Hyperparameters,
) -> f64 {
    let rule = RowRule::Principal {
        lambda: hp.lambda,
        theta: hp.theta,
        penalty,
    };
    rule_objective(data, groups, &rule, factors)
}

pub(crate) fn rule_objective(
    data: &DataPair,
    groups: &GroupPartition,
    rule: &RowRule<'_>,
    factors: &FactorPair,
) -> f64 {
    let fitted = data.x() * &factors.c * factors.d.transpose();
    0.5 * (data.y() - fitted).norm_squared() + rule.value(&factors.c, groups)
}

/// Shared outer loop for every estimator in this crate.
pub(crate) struct Engine<'a> {
    pub data: &'a DataPair,
    pub groups: &'a GroupPartition,
    pub rule: RowRule<'a>,
    pub method: Method,
    pub hyperparameters: Hyperparameters,
    pub config: SolverConfig,
    /// Keep `D` fixed at its initial value (full-rank baselines).
    pub fixed_d: bool,
}

impl Engine<'_> {
    pub fn run(&self, d0: Matrix) -> Result<FitReport> {
        let c0 = Matrix::zeros(self.data.p(), d0.ncols());
        self.run_from(c0, d0)
    }

    /// Runs from `start` if given (its shape must match), otherwise from
    /// `C = 0` and `default_d()`.
    pub fn start(
        &self,
        start: Option<&FactorPair>,
        default_d: impl FnOnce() -> Matrix,
    ) -> Result<FitReport> {
        match start {
            Some(f) => self.run_from(f.c.clone(), f.d.clone()),
            None => self.run(default_d()),
        }
    }

    pub fn run_from(&self, c0: Matrix, d0: Matrix) -> Result<FitReport> {
        self.config.validate()?;
        let data = self.data;
        let mut state = SolverState::new(data, c0, d0)?;
        let mut trace = vec![rule_objective(data, self.groups, &self.rule, &state.factors())];
        let mut degenerate: Vec<usize> = Vec::new();
        let mut converged = false;
        let mut iterations = 0;
        for t in 1..=self.config.max_outer_iterations {
            iterations = t;
            let flagged = state.sweep(data, self.groups, &self.rule, self.config.inner_sweeps);
            for i in flagged {
                if !degenerate.contains(&i) {
                    degenerate.push(i);
                }
            }
            if !self.fixed_d {
                match update_d(data, &state.c) {
                    Ok(d) => state.set_d(data, d),
                    Err(Error::ZeroCrossProduct) => state.refresh(data),
                    Err(e) => return Err(e),
                }
            } else {
                state.refresh(data);
            }
            let previous = *trace.last().expect("trace starts non-empty");
            let current = rule_objective(data, self.groups, &self.rule, &state.factors());
            if current > previous + DESCENT_SLACK.max(1e-12 * previous.abs()) {
                return Err(Error::NonDecreasingObjective {
                    iteration: t,
                    previous,
                    current,
                });
            }
            trace.push(current);
            if (previous - current).abs() <= self.config.objective_tolerance * previous.abs() {
                converged = true;
                break;
            }
        }
        degenerate.sort_unstable();
        let factors = state.factors();
        Ok(FitReport {
            method: self.method,
            active_rows: factors.active_rows(),
            factors,
            objective_trace: trace,
            iterations,
            converged,
            degenerate_rows: degenerate,
            hyperparameters: self.hyperparameters,
        })
    }
}

/// Fits the principal-component-guided sparse reduced-rank model, building
/// the penalty matrices from `data` first.
pub fn fit(
    data: &DataPair,
    groups: &GroupPartition,
    hp: &Hyperparameters,
    config: &SolverConfig,
) -> Result<FitReport> {
    validate_inputs(data, groups, hp)?;
    let penalty = if hp.theta > 0.0 {
        build_penalty_set(data, groups, DEFAULT_RANK_TOLERANCE)?
    } else {
        PenaltySet::zeros(groups)
    };
    fit_with_penalty(data, groups, &penalty, hp, config)
}

/// Like [`fit`] with precomputed penalty matrices.
pub fn fit_with_penalty(
    data: &DataPair,
    groups: &GroupPartition,
    penalty: &PenaltySet,
    hp: &Hyperparameters,
    config: &SolverConfig,
) -> Result<FitReport> {
    fit_with_penalty_from(data, groups, penalty, hp, config, None)
}

/// Like [`fit_with_penalty`], starting from `start` instead of `(0, D⁽⁰⁾)`
/// when given. Used for warm starts along a λ path.
pub fn fit_with_penalty_from(
    data: &DataPair,
    groups: &GroupPartition,
    penalty: &PenaltySet,
    hp: &Hyperparameters,
    config: &SolverConfig,
    start: Option<&FactorPair>,
) -> Result<FitReport> {
    validate_inputs(data, groups, hp)?;
    if penalty.diagonal().len() != data.p() {
        return Err(Error::DimensionMismatch(format!(
            "penalty covers {} predictors but X has {}",
            penalty.diagonal().len(),
            data.p()
        )));
    }
    let engine = Engine {
        data,
        groups,
        rule: RowRule::Principal {
            lambda: hp.lambda,
            theta: hp.theta,
            penalty,
        },
        method: Method::Proposed,
        hyperparameters: *hp,
        config: *config,
        fixed_d: false,
    };
    engine.start(start, || initial_d(data, hp.rank, config.seed))
}

/// `(X_new − x̄) C Dᵀ + ȳ` when centering statistics are given, `X_new C Dᵀ`
/// otherwise.
pub fn predict(
    x_new: &Matrix,
    factors: &FactorPair,
    centering: Option<&Centering>,
) -> Result<Matrix> {
    if x_new.ncols() != factors.c.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "model has {} predictors but new data has {} columns",
            factors.c.nrows(),
            x_new.ncols()
        )));
    }
    match centering {
        None => Ok(x_new * &factors.c * factors.d.transpose()),
        Some(cent) => {
            if cent.y_means.len() != factors.d.nrows() {
                return Err(Error::DimensionMismatch(format!(
                    "centering has {} response means but model has {} responses",
                    cent.y_means.len(),
                    factors.d.nrows()
                )));
            }
            let xc = cent.transform_x(x_new)?;
            let mut out = xc * &factors.c * factors.d.transpose();
            for (j, mut col) in out.column_iter_mut().enumerate() {
                col.add_scalar_mut(cent.y_means[j]);
            }
            Ok(out)
        }
    }
}
