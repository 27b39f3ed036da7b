//! Shared domain types: data, group partitions, factor pairs, hyperparameters
//! and fit reports.
//!
//! The model is `Y = X C Dᵀ + E` with `C` (p×r) row-sparse and `D` (q×r)
//! column-orthonormal. Everything downstream (penalties, solvers, baselines,
//! cross-validation) consumes these types.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Tolerance for `DᵀD = I` checks.
pub const ORTHONORMAL_TOL: f64 = 1e-10;

/// Column statistics removed from the training data, kept so predictions can
/// be mapped back to the original scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Centering {
    pub x_means: Vec<f64>,
    pub y_means: Vec<f64>,
    /// Per-predictor divisors when unit-variance scaling was applied.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_scales: Option<Vec<f64>>,
}

impl Centering {
    /// Maps raw predictors into the space the model was fitted in.
    pub fn transform_x(&self, x: &Matrix) -> Result<Matrix> {
        if x.ncols() != self.x_means.len() {
            return Err(Error::DimensionMismatch(format!(
                "expected {} predictor columns, got {}",
                self.x_means.len(),
                x.ncols()
            )));
        }
        let mut out = x.clone();
        for (j, mut col) in out.column_iter_mut().enumerate() {
            col.add_scalar_mut(-self.x_means[j]);
            if let Some(scales) = &self.x_scales {
                col /= scales[j];
            }
        }
        Ok(out)
    }
}

/// Paired response (n×q) and design (n×p) matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct DataPair {
    x: Matrix,
    y: Matrix,
    centering: Option<Centering>,
}

fn check_finite(m: &Matrix, what: &'static str) -> Result<()> {
    for (j, col) in m.column_iter().enumerate() {
        if let Some(i) = col.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what, row: i, col: j });
        }
    }
    Ok(())
}

impl DataPair {
    pub fn new(x: Matrix, y: Matrix) -> Result<Self> {
        if x.nrows() != y.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "X has {} rows but Y has {}",
                x.nrows(),
                y.nrows()
            )));
        }
        if x.nrows() == 0 || x.ncols() == 0 || y.ncols() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "empty data: X is {}x{}, Y is {}x{}",
                x.nrows(),
                x.ncols(),
                y.nrows(),
                y.ncols()
            )));
        }
        check_finite(&x, "X")?;
        check_finite(&y, "Y")?;
        Ok(Self {
            x,
            y,
            centering: None,
        })
    }

    pub fn x(&self) -> &Matrix {
        &self.x
    }

    pub fn y(&self) -> &Matrix {
        &self.y
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn q(&self) -> usize {
        self.y.ncols()
    }

    pub fn is_centered(&self) -> bool {
        self.centering.is_some()
    }

    pub fn centering(&self) -> Option<&Centering> {
        self.centering.as_ref()
    }

    /// Removes column means from X and Y, recording them for prediction.
    ///
    /// Calling this on already-centered data returns a copy unchanged so the
    /// original means are not lost.
    pub fn center_columns(&self) -> DataPair {
        if self.centering.is_some() {
            return self.clone();
        }
        let (x, x_means) = center(&self.x);
        let (y, y_means) = center(&self.y);
        DataPair {
            x,
            y,
            centering: Some(Centering {
                x_means,
                y_means,
                x_scales: None,
            }),
        }
    }

    /// Centers and additionally scales every predictor to unit sample
    /// variance. Zero-variance predictors keep a divisor of 1.
    pub fn standardize(&self) -> DataPair {
        let mut out = self.center_columns();
        if out.centering.as_ref().is_some_and(|c| c.x_scales.is_some()) {
            return out;
        }
        let n = out.n().max(2) as f64;
        let scales: Vec<f64> = out
            .x
            .column_iter()
            .map(|c| {
                let s = (c.norm_squared() / (n - 1.0)).sqrt();
                if s > 0.0 {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        for (j, mut col) in out.x.column_iter_mut().enumerate() {
            col /= scales[j];
        }
        if let Some(c) = out.centering.as_mut() {
            c.x_scales = Some(scales);
        }
        out
    }

    /// Indices of predictors whose column is constant.
    pub fn zero_variance_columns(&self) -> Vec<usize> {
        self.x
            .column_iter()
            .enumerate()
            .filter(|(_, c)| c.iter().all(|v| *v == c[0]))
            .map(|(j, _)| j)
            .collect()
    }

    /// Raw (uncentered) subset of observations.
    pub fn select_rows(&self, rows: &[usize]) -> Result<DataPair> {
        if rows.is_empty() {
            return Err(Error::EmptyInput("row selection".into()));
        }
        DataPair::new(self.x.select_rows(rows), self.y.select_rows(rows))
    }
}

fn center(m: &Matrix) -> (Matrix, Vec<f64>) {
    let mut out = m.clone();
    let mut means = Vec::with_capacity(m.ncols());
    for mut col in out.column_iter_mut() {
        let mean = col.mean();
        col.add_scalar_mut(-mean);
        means.push(mean);
    }
    (out, means)
}

/// Non-overlapping, exhaustive assignment of predictors to groups.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct GroupPartition {
    assignment: Vec<usize>,
    members: Vec<Vec<usize>>,
    local: Vec<usize>,
}

impl GroupPartition {
    /// Builds a partition from zero-based group labels, one per predictor.
    /// Labels must cover `0..K` with no gaps.
    pub fn new(assignment: Vec<usize>) -> Result<Self> {
        if assignment.is_empty() {
            return Err(Error::BadPartition("no predictors assigned".into()));
        }
        let k = assignment.iter().max().copied().unwrap_or(0) + 1;
        let mut members = vec![Vec::new(); k];
        let mut local = Vec::with_capacity(assignment.len());
        for (i, &g) in assignment.iter().enumerate() {
            local.push(members[g].len());
            members[g].push(i);
        }
        if let Some(empty) = members.iter().position(Vec::is_empty) {
            return Err(Error::BadPartition(format!("group {} is empty", empty + 1)));
        }
        Ok(Self {
            assignment,
            members,
            local,
        })
    }

    /// All `p` predictors in one group.
    pub fn single(p: usize) -> Self {
        Self {
            assignment: vec![0; p],
            members: vec![(0..p).collect()],
            local: (0..p).collect(),
        }
    }

    /// Consecutive blocks of the given sizes.
    pub fn contiguous(sizes: &[usize]) -> Result<Self> {
        let assignment = sizes
            .iter()
            .enumerate()
            .flat_map(|(k, &s)| std::iter::repeat_n(k, s))
            .collect();
        Self::new(assignment)
    }

    pub fn num_groups(&self) -> usize {
        self.members.len()
    }

    /// Number of predictors covered.
    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn group_of(&self, predictor: usize) -> usize {
        self.assignment[predictor]
    }

    /// Position of a predictor within its group's member list.
    pub fn local_index(&self, predictor: usize) -> usize {
        self.local[predictor]
    }

    pub fn members(&self, group: usize) -> &[usize] {
        &self.members[group]
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.members.iter().map(Vec::len).collect()
    }
}

impl TryFrom<Vec<usize>> for GroupPartition {
    type Error = Error;

    fn try_from(v: Vec<usize>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<GroupPartition> for Vec<usize> {
    fn from(g: GroupPartition) -> Self {
        g.assignment
    }
}

/// Predictor factor `C` (p×r) and orthonormal response factor `D` (q×r).
#[derive(Debug, Clone, PartialEq)]
pub struct FactorPair {
    pub c: Matrix,
    pub d: Matrix,
}

impl FactorPair {
    pub fn new(c: Matrix, d: Matrix) -> Result<Self> {
        if c.ncols() != d.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "C has {} columns but D has {}",
                c.ncols(),
                d.ncols()
            )));
        }
        Ok(Self { c, d })
    }

    pub fn rank(&self) -> usize {
        self.c.ncols()
    }

    /// `B = C Dᵀ` (p×q).
    pub fn coefficients(&self) -> Matrix {
        &self.c * self.d.transpose()
    }

    /// Predictors whose row of `C` is not exactly zero.
    pub fn active_rows(&self) -> Vec<usize> {
        (0..self.c.nrows())
            .filter(|&i| self.c.row(i).iter().any(|v| *v != 0.0))
            .collect()
    }

    /// `‖DᵀD − I‖_F`.
    pub fn orthonormality_error(&self) -> f64 {
        orthonormality_error(&self.d)
    }

    /// Numerical rank of `C Dᵀ`, equal to that of `C` since `D` is orthonormal.
    pub fn effective_rank(&self) -> usize {
        if self.c.iter().all(|v| *v == 0.0) {
            return 0;
        }
        let sv = self.c.clone().singular_values();
        let top = sv.max();
        sv.iter().filter(|s| **s > 1e-8 * top).count()
    }
}

pub fn orthonormality_error(d: &Matrix) -> f64 {
    let g = d.transpose() * d;
    (g - Matrix::identity(d.ncols(), d.ncols())).norm()
}

/// Regularization weights and target rank.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    pub lambda: f64,
    pub theta: f64,
    pub alpha: f64,
    pub rank: usize,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Self {
            lambda: 0.0,
            theta: 0.0,
            alpha: 1.0,
            rank: 1,
        }
    }
}

impl Hyperparameters {
    pub fn new(lambda: f64, theta: f64, rank: usize) -> Self {
        Self {
            lambda,
            theta,
            alpha: 1.0,
            rank,
        }
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidHyperparameter(format!(
                "lambda must be a finite nonnegative number, got {}",
                self.lambda
            )));
        }
        if !(self.theta >= 0.0 && self.theta.is_finite()) {
            return Err(Error::InvalidHyperparameter(format!(
                "theta must be a finite nonnegative number, got {}",
                self.theta
            )));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidHyperparameter(format!(
                "alpha must lie in [0, 1], got {}",
                self.alpha
            )));
        }
        if self.rank == 0 {
            return Err(Error::InvalidHyperparameter("rank must be at least 1".into()));
        }
        Ok(())
    }
}

/// Estimators that produce a [`FitReport`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Proposed,
    MLasso,
    MElastic,
    Srrr,
    Errr,
}

impl Method {
    /// Reporting order used in result tables.
    pub const ALL: [Method; 5] = [
        Method::Proposed,
        Method::MLasso,
        Method::MElastic,
        Method::Srrr,
        Method::Errr,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Proposed => "Proposed",
            Method::MLasso => "MLasso",
            Method::MElastic => "MElastic",
            Method::Srrr => "SRRR",
            Method::Errr => "ERRR",
        }
    }

    /// Whether the estimator factors `B` as `C Dᵀ` with a target rank.
    pub fn is_reduced_rank(&self) -> bool {
        matches!(self, Method::Proposed | Method::Srrr | Method::Errr)
    }

    pub fn uses_theta(&self) -> bool {
        matches!(self, Method::Proposed)
    }

    pub fn uses_alpha(&self) -> bool {
        matches!(self, Method::MElastic | Method::Errr)
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "proposed" => Ok(Method::Proposed),
            "mlasso" => Ok(Method::MLasso),
            "melastic" => Ok(Method::MElastic),
            "srrr" => Ok(Method::Srrr),
            "errr" => Ok(Method::Errr),
            other => Err(format!("unknown method '{other}'")),
        }
    }
}

/// Result of any fit.
///
/// Full-rank baselines store `B` in `factors.c` with `factors.d = I_q`.
#[derive(Debug, Clone)]
pub struct FitReport {
    pub method: Method,
    pub factors: FactorPair,
    /// Objective before the first update followed by one value per outer
    /// iteration.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub active_rows: Vec<usize>,
    /// Rows forced to zero because their update had no curvature.
    pub degenerate_rows: Vec<usize>,
    pub hyperparameters: Hyperparameters,
}

impl FitReport {
    pub fn final_objective(&self) -> f64 {
        *self.objective_trace.last().unwrap_or(&f64::NAN)
    }

    pub fn coefficients(&self) -> Matrix {
        self.factors.coefficients()
    }

    pub fn effective_rank(&self) -> usize {
        self.factors.effective_rank()
    }
}

/// Inputs that passed [`validate_inputs`].
#[derive(Debug, Clone, Copy)]
pub struct Problem<'a> {
    pub data: &'a DataPair,
    pub groups: &'a GroupPartition,
    pub hyperparameters: Hyperparameters,
}

/// Checks that data, partition and hyperparameters are mutually consistent.
pub fn validate_inputs<'a>(
    data: &'a DataPair,
    groups: &'a GroupPartition,
    hp: &Hyperparameters,
) -> Result<Problem<'a>> {
    if groups.len() != data.p() {
        return Err(Error::BadPartition(format!(
            "partition covers {} predictors but X has {} columns",
            groups.len(),
            data.p()
        )));
    }
    hp.validate()?;
    let max = data.p().min(data.q());
    if hp.rank > max {
        return Err(Error::RankTooLarge {
            rank: hp.rank,
            max,
        });
    }
    Ok(Problem {
        data,
        groups,
        hyperparameters: *hp,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(n: usize, p: usize) -> Matrix {
        Matrix::from_fn(n, p, |i, j| ((i * 7 + j * 3) % 11) as f64 - 2.0)
    }

    #[test]
    fn valid_handle() {
        let data = DataPair::new(ramp(10, 4), ramp(10, 2)).unwrap();
        let groups = GroupPartition::single(4);
        assert!(validate_inputs(&data, &groups, &Hyperparameters::new(0.1, 0.0, 2)).is_ok());
    }

    #[test]
    fn row_mismatch() {
        let err = DataPair::new(ramp(10, 4), ramp(9, 2)).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch(_)));
    }

    #[test]
    fn rank_too_large() {
        let data = DataPair::new(ramp(10, 4), ramp(10, 2)).unwrap();
        let groups = GroupPartition::single(4);
        let err = validate_inputs(&data, &groups, &Hyperparameters::new(0.1, 0.0, 3)).unwrap_err();
        assert_eq!(err, Error::RankTooLarge { rank: 3, max: 2 });
    }

    #[test]
    fn non_finite_rejected() {
        let mut x = ramp(5, 2);
        x[(3, 1)] = f64::NAN;
        let err = DataPair::new(x, ramp(5, 1)).unwrap_err();
        assert_eq!(
            err,
            Error::NonFinite {
                what: "X",
                row: 3,
                col: 1
            }
        );
    }

    #[test]
    fn bad_partitions() {
        assert!(matches!(
            GroupPartition::new(vec![0, 2, 2]),
            Err(Error::BadPartition(_))
        ));
        let data = DataPair::new(ramp(10, 4), ramp(10, 2)).unwrap();
        let groups = GroupPartition::single(3);
        assert!(matches!(
            validate_inputs(&data, &groups, &Hyperparameters::new(0.1, 0.0, 1)),
            Err(Error::BadPartition(_))
        ));
    }

    #[test]
    fn validation_is_pure() {
        let data = DataPair::new(ramp(10, 4), ramp(10, 2)).unwrap();
        let groups = GroupPartition::single(4);
        let hp = Hyperparameters::new(0.1, 0.0, 3);
        let a = validate_inputs(&data, &groups, &hp).map(|_| ());
        let b = validate_inputs(&data, &groups, &hp).map(|_| ());
        assert_eq!(a, b);
    }

    #[test]
    fn centering_arithmetic() {
        let x = Matrix::from_column_slice(3, 1, &[1.0, 2.0, 3.0]);
        let y = Matrix::from_column_slice(3, 1, &[0.0, 0.0, 3.0]);
        let c = DataPair::new(x, y).unwrap().center_columns();
        assert!(c.is_centered());
        assert_eq!(c.x().as_slice(), &[-1.0, 0.0, 1.0]);
        assert_eq!(c.centering().unwrap().x_means, vec![2.0]);
        assert_eq!(c.centering().unwrap().y_means, vec![1.0]);
    }

    #[test]
    fn centering_is_idempotent_on_centered_columns() {
        let x = Matrix::from_column_slice(4, 1, &[-1.5, 0.5, 2.0, -1.0]);
        let data = DataPair::new(x.clone(), x.clone()).unwrap();
        let c = data.center_columns();
        assert!((c.x() - &x).amax() < 1e-12);
        for col in c.x().column_iter().chain(c.y().column_iter()) {
            assert!(col.mean().abs() < 1e-12);
        }
    }

    #[test]
    fn constant_column_becomes_zero_and_is_reported() {
        let mut x = ramp(6, 3);
        x.column_mut(1).fill(4.0);
        let data = DataPair::new(x, ramp(6, 2)).unwrap();
        assert_eq!(data.zero_variance_columns(), vec![1]);
        let c = data.center_columns();
        assert!(c.x().column(1).iter().all(|v| *v == 0.0));
        assert_eq!(c.zero_variance_columns(), vec![1]);
    }

    #[test]
    fn standardize_gives_unit_variance() {
        let data = DataPair::new(ramp(12, 3), ramp(12, 1)).unwrap().standardize();
        for col in data.x().column_iter() {
            let var = col.norm_squared() / 11.0;
            assert!((var - 1.0).abs() < 1e-12);
        }
        let raw = ramp(12, 3);
        let mapped = data.centering().unwrap().transform_x(&raw).unwrap();
        assert!((mapped - data.x()).amax() < 1e-12);
    }

    #[test]
    fn partition_serde_roundtrip() {
        let g = GroupPartition::contiguous(&[2, 3]).unwrap();
        assert_eq!(g.sizes(), vec![2, 3]);
        assert_eq!(g.members(1), &[2, 3, 4]);
        let v: Vec<usize> = g.clone().into();
        assert_eq!(GroupPartition::try_from(v).unwrap(), g);
    }

    #[test]
    fn hyperparameter_ranges() {
        assert!(Hyperparameters::new(-1.0, 0.0, 1).validate().is_err());
        assert!(Hyperparameters::new(1.0, -0.1, 1).validate().is_err());
        assert!(Hyperparameters::new(1.0, 0.0, 0).validate().is_err());
        assert!(Hyperparameters::new(1.0, 0.0, 1)
            .with_alpha(1.5)
            .validate()
            .is_err());
    }
}
