//! Estimation, prediction and selection metrics, plus replication summaries.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{FactorPair, Matrix, Method};

fn same_shape(a: &Matrix, b: &Matrix, what: &str) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch(format!(
            "{what}: {:?} vs {:?}",
            a.shape(),
            b.shape()
        )));
    }
    Ok(())
}

/// `‖ĈD̂ᵀ − CDᵀ‖²_F / (pq)`.
pub fn mse_b(estimate: &FactorPair, truth: &FactorPair) -> Result<f64> {
    let b_hat = estimate.coefficients();
    let b = truth.coefficients();
    same_shape(&b_hat, &b, "coefficient matrices")?;
    Ok((b_hat - &b).norm_squared() / b.len() as f64)
}

/// `‖X_test ĈD̂ᵀ − X_test CDᵀ‖²_F / (n_test q)`, measured against the
/// noiseless signal.
pub fn mse_y(x_test: &Matrix, estimate: &FactorPair, truth: &FactorPair) -> Result<f64> {
    let b_hat = estimate.coefficients();
    let b = truth.coefficients();
    same_shape(&b_hat, &b, "coefficient matrices")?;
    if x_test.ncols() != b.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "X_test has {} columns, coefficients have {} rows",
            x_test.ncols(),
            b.nrows()
        )));
    }
    let diff = x_test * (b_hat - b);
    Ok(diff.norm_squared() / diff.len() as f64)
}

/// True positive and true negative rates of row selection.
///
/// An empty truth set (either side) scores 1 on that side.
pub fn tpr_tnr(active: &[usize], truth_nonzero: &[usize], p: usize) -> (f64, f64) {
    let mut est = vec![false; p];
    for &i in active {
        est[i] = true;
    }
    let mut truth = vec![false; p];
    for &i in truth_nonzero {
        truth[i] = true;
    }
    let (mut tp, mut pos, mut tn, mut neg) = (0usize, 0usize, 0usize, 0usize);
    for (e, t) in est.iter().zip(&truth) {
        if *t {
            pos += 1;
            tp += usize::from(*e);
        } else {
            neg += 1;
            tn += usize::from(!*e);
        }
    }
    let rate = |hit: usize, total: usize| {
        if total == 0 {
            1.0
        } else {
            hit as f64 / total as f64
        }
    };
    (rate(tp, pos), rate(tn, neg))
}

/// `‖Y_test − Ŷ‖²_F / (n_test q)`.
pub fn mspe(observed: &Matrix, predicted: &Matrix) -> Result<f64> {
    same_shape(observed, predicted, "responses")?;
    Ok((observed - predicted).norm_squared() / observed.len() as f64)
}

/// One method on one replication of one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub scenario: String,
    pub method: Method,
    pub replication: usize,
    pub mse_b: Option<f64>,
    pub mse_y: Option<f64>,
    pub tpr: Option<f64>,
    pub tnr: Option<f64>,
    pub mspe: Option<f64>,
}

/// Mean and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSe {
    pub mean: f64,
    /// Sample standard deviation over `√m`; zero for a single value.
    pub se: f64,
}

pub fn mean_se(values: &[f64]) -> Result<MeanSe> {
    if values.is_empty() {
        return Err(Error::EmptyInput("no values to summarize".into()));
    }
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    if values.len() == 1 {
        return Ok(MeanSe { mean, se: 0.0 });
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
    Ok(MeanSe {
        mean,
        se: (var / m).sqrt(),
    })
}

/// Summary of all replications for one (scenario, method) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub scenario: String,
    pub method: Method,
    pub replications: usize,
    pub mse_b: Option<MeanSe>,
    pub mse_y: Option<MeanSe>,
    pub tpr: Option<MeanSe>,
    pub tnr: Option<MeanSe>,
    pub mspe: Option<MeanSe>,
}

/// Groups records by scenario (first-seen order) and method (table order).
pub fn aggregate(records: &[EvalRecord]) -> Result<Vec<SummaryRow>> {
    if records.is_empty() {
        return Err(Error::EmptyInput("no records to aggregate".into()));
    }
    let mut scenarios: Vec<&str> = Vec::new();
    for r in records {
        if !scenarios.contains(&r.scenario.as_str()) {
            scenarios.push(&r.scenario);
        }
    }
    let mut rows = Vec::new();
    for scenario in scenarios {
        for method in Method::ALL {
            let cell: Vec<&EvalRecord> = records
                .iter()
                .filter(|r| r.scenario == scenario && r.method == method)
                .collect();
            if cell.is_empty() {
                continue;
            }
            let summarize = |get: fn(&EvalRecord) -> Option<f64>| -> Option<MeanSe> {
                let vals: Vec<f64> = cell.iter().filter_map(|r| get(r)).collect();
                mean_se(&vals).ok()
            };
            rows.push(SummaryRow {
                scenario: scenario.to_string(),
                method,
                replications: cell.len(),
                mse_b: summarize(|r| r.mse_b),
                mse_y: summarize(|r| r.mse_y),
                tpr: summarize(|r| r.tpr),
                tnr: summarize(|r| r.tnr),
                mspe: summarize(|r| r.mspe),
            });
        }
    }
    Ok(rows)
}
