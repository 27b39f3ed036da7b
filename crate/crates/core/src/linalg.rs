//! Small dense linear-algebra helpers on top of nalgebra.

use crate::model::{Matrix, Vector};

/// Thin SVD with singular values sorted in descending order.
pub(crate) fn thin_svd(m: &Matrix) -> (Matrix, Vec<f64>, Matrix) {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("left singular vectors requested");
    let v_t = svd.v_t.expect("right singular vectors requested");
    (u, svd.singular_values.iter().copied().collect(), v_t)
}

/// Count of singular values above `rel_tol × σ_max`.
pub(crate) fn numerical_rank(singular_values: &[f64], rel_tol: f64) -> usize {
    let top = singular_values.first().copied().unwrap_or(0.0);
    if top <= 0.0 {
        return 0;
    }
    singular_values.iter().filter(|s| **s > rel_tol * top).count()
}

/// Extends the orthonormal columns of `basis` to `cols` columns by
/// Gram–Schmidt over `candidates`, skipping candidates that are (nearly) in
/// the current span.
pub(crate) fn complete_orthonormal<I>(basis: &Matrix, cols: usize, candidates: I) -> Matrix
where
    I: IntoIterator<Item = Vector>,
{
    let dim = basis.nrows();
    let mut out: Vec<Vector> = basis.column_iter().map(|c| c.into_owned()).collect();
    for mut v in candidates {
        if out.len() >= cols {
            break;
        }
        let original = v.norm();
        if original == 0.0 {
            continue;
        }
        // two passes keep the result orthogonal to machine precision
        for _ in 0..2 {
            for u in &out {
                let proj = u.dot(&v);
                v.axpy(-proj, u, 1.0);
            }
        }
        let norm = v.norm();
        if norm > 1e-8 * original {
            out.push(v / norm);
        }
    }
    assert!(out.len() >= cols, "not enough candidates to complete basis");
    if cols == 0 {
        return Matrix::zeros(dim, 0);
    }
    Matrix::from_columns(&out[..cols])
}

/// Standard basis vectors of length `dim`.
pub(crate) fn standard_basis(dim: usize) -> impl Iterator<Item = Vector> {
    (0..dim).map(move |i| {
        let mut e = Vector::zeros(dim);
        e[i] = 1.0;
        e
    })
}
