//! Versioned JSON model file.
//!
//! Floats are written in their shortest round-trip form, so a saved model
//! reloads bit for bit.

use std::path::Path;

use pcrrr::{Centering, FactorPair, FitReport, GroupPartition, Hyperparameters, Matrix, Method};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const FORMAT: &str = "pcrrr-model";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub format: String,
    pub version: u32,
    pub method: Method,
    pub predictors: Vec<String>,
    pub responses: Vec<String>,
    pub group_labels: Vec<String>,
    pub groups: GroupPartition,
    pub hyperparameters: Hyperparameters,
    pub centering: Option<Centering>,
    /// Rows of `C` (p×r).
    pub c: Vec<Vec<f64>>,
    /// Rows of `D` (q×r).
    pub d: Vec<Vec<f64>>,
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub active_rows: Vec<usize>,
}

fn rows(m: &Matrix) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn from_rows(rows: &[Vec<f64>], ncols: usize, what: &str) -> CliResult<Matrix> {
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(CliError::Data(format!("model file: ragged {what} matrix")));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(Matrix::from_row_slice(rows.len(), ncols, &flat))
}

impl ModelArtifact {
    pub fn new(
        report: &FitReport,
        predictors: Vec<String>,
        responses: Vec<String>,
        groups: GroupPartition,
        group_labels: Vec<String>,
        centering: Option<Centering>,
    ) -> Self {
        Self {
            format: FORMAT.into(),
            version: VERSION,
            method: report.method,
            predictors,
            responses,
            group_labels,
            groups,
            hyperparameters: report.hyperparameters,
            centering,
            c: rows(&report.factors.c),
            d: rows(&report.factors.d),
            objective_trace: report.objective_trace.clone(),
            iterations: report.iterations,
            converged: report.converged,
            active_rows: report.active_rows.clone(),
        }
    }

    pub fn factors(&self) -> CliResult<FactorPair> {
        let r = self.d.first().map_or(0, Vec::len);
        let c = from_rows(&self.c, r, "C")?;
        let d = from_rows(&self.d, r, "D")?;
        if c.nrows() != self.predictors.len() || d.nrows() != self.responses.len() {
            return Err(CliError::Data(
                "model file: factor shapes do not match predictor/response names".into(),
            ));
        }
        Ok(FactorPair::new(c, d)?)
    }

    pub fn to_json(&self) -> CliResult<String> {
        serde_json::to_string_pretty(self).map_err(|e| CliError::Data(e.to_string()))
    }

    pub fn from_json(text: &str) -> CliResult<Self> {
        let value: serde_json::Value = serde_json::from_str(text)
            .map_err(|e| CliError::Data(format!("model file: {e}")))?;
        match (value.get("format").and_then(|f| f.as_str()), value.get("version").and_then(|v| v.as_u64())) {
            (Some(FORMAT), Some(v)) if v == u64::from(VERSION) => {}
            (Some(FORMAT), Some(v)) => {
                return Err(CliError::Data(format!("model file: unsupported version {v}")))
            }
            _ => return Err(CliError::Data("model file: not a pcrrr model".into())),
        }
        serde_json::from_value(value).map_err(|e| CliError::Data(format!("model file: {e}")))
    }

    pub fn save(&self, path: &Path) -> CliResult<()> {
        std::fs::write(path, self.to_json()? + "\n")
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| e.context(path.display()))
    }
}
