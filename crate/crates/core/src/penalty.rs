//! Per-group principal-component penalty matrices.
//!
//! For a group block `X⁽ᵏ⁾ = L Σ Rᵀ` with singular values
//! `σ₁ ≥ … ≥ σ_m > 0`, the penalty is
//!
//! ```text
//! A⁽ᵏ⁾ = R · diag(σ₁² − σ₁², σ₁² − σ₂², …, σ₁² − σ_m²) · Rᵀ
//! ```
//!
//! so a coefficient vector aligned with the leading right singular vector
//! costs nothing and trailing directions cost the most.

use crate::error::{Error, Result};
use crate::linalg::{numerical_rank, thin_svd};
use crate::model::{DataPair, GroupPartition, Matrix};

/// Singular values below `DEFAULT_RANK_TOLERANCE × σ_max` are treated as zero.
pub const DEFAULT_RANK_TOLERANCE: f64 = 1e-10;

/// Thin right singular structure of one group's design block, truncated at
/// its numerical rank.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupSpectrum {
    right_vectors: Matrix,
    singular_values: Vec<f64>,
}

impl GroupSpectrum {
    /// `R⁽ᵏ⁾`, p_k × m_k with orthonormal columns.
    pub fn right_vectors(&self) -> &Matrix {
        &self.right_vectors
    }

    /// Descending, strictly positive.
    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    /// Numerical rank `m_k`.
    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }

    /// `σ₁² − σ_j²` for `j = 1..m_k`; the first entry is exactly zero.
    pub fn gaps(&self) -> Vec<f64> {
        let top = self.singular_values[0] * self.singular_values[0];
        self.singular_values
            .iter()
            .map(|s| top - s * s)
            .collect()
    }
}

/// Thin SVD of a group block truncated at `#{σ > rank_tolerance · σ_max}`.
///
/// The returned error carries group index 0; [`build_penalty_set`] rewrites
/// it with the offending group.
pub fn group_svd(block: &Matrix, rank_tolerance: f64) -> Result<GroupSpectrum> {
    if block.ncols() == 0 || block.nrows() == 0 {
        return Err(Error::AllZeroBlock { group: 0 });
    }
    let (_, sv, v_t) = thin_svd(block);
    let m = numerical_rank(&sv, rank_tolerance);
    if m == 0 {
        return Err(Error::AllZeroBlock { group: 0 });
    }
    Ok(GroupSpectrum {
        right_vectors: v_t.rows(0, m).transpose(),
        singular_values: sv[..m].to_vec(),
    })
}

/// `R · diag(gaps) · Rᵀ`, symmetrized.
pub fn build_penalty(spectrum: &GroupSpectrum) -> Matrix {
    let r = &spectrum.right_vectors;
    let mut scaled = r.clone();
    for (j, gap) in spectrum.gaps().into_iter().enumerate() {
        scaled.column_mut(j).scale_mut(gap);
    }
    let a = scaled * r.transpose();
    (&a + a.transpose()) * 0.5
}

/// Penalty matrices for every group of a partition.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltySet {
    matrices: Vec<Matrix>,
    spectra: Vec<GroupSpectrum>,
    diagonal: Vec<f64>,
}

impl PenaltySet {
    /// An all-zero penalty, used when the principal-component term is off.
    pub fn zeros(groups: &GroupPartition) -> Self {
        Self {
            matrices: groups
                .sizes()
                .into_iter()
                .map(|s| Matrix::zeros(s, s))
                .collect(),
            spectra: Vec::new(),
            diagonal: vec![0.0; groups.len()],
        }
    }

    /// `A⁽ᵏ⁾` in the order of `groups.members(k)`.
    pub fn matrix(&self, group: usize) -> &Matrix {
        &self.matrices[group]
    }

    pub fn matrices(&self) -> &[Matrix] {
        &self.matrices
    }

    /// Empty for a [`PenaltySet::zeros`] set.
    pub fn spectra(&self) -> &[GroupSpectrum] {
        &self.spectra
    }

    /// `A_ii` indexed by predictor.
    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    pub fn num_groups(&self) -> usize {
        self.matrices.len()
    }
}

/// Builds `A⁽ᵏ⁾` for `k = 1..K` from the columns of `data.x()`.
pub fn build_penalty_set(
    data: &DataPair,
    groups: &GroupPartition,
    rank_tolerance: f64,
) -> Result<PenaltySet> {
    if groups.len() != data.p() {
        return Err(Error::BadPartition(format!(
            "partition covers {} predictors but X has {} columns",
            groups.len(),
            data.p()
        )));
    }
    let mut matrices = Vec::with_capacity(groups.num_groups());
    let mut spectra = Vec::with_capacity(groups.num_groups());
    let mut diagonal = vec![0.0; data.p()];
    for k in 0..groups.num_groups() {
        let members = groups.members(k);
        let block = data.x().select_columns(members);
        let spectrum = group_svd(&block, rank_tolerance).map_err(|e| match e {
            Error::AllZeroBlock { .. } => Error::AllZeroBlock { group: k },
            other => other,
        })?;
        let a = build_penalty(&spectrum);
        for (local, &i) in members.iter().enumerate() {
            diagonal[i] = a[(local, local)];
        }
        matrices.push(a);
        spectra.push(spectrum);
    }
    Ok(PenaltySet {
        matrices,
        spectra,
        diagonal,
    })
}
