#![allow(dead_code)]

use pcrrr::{DataPair, GroupPartition, Matrix, PenaltySet};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn normal(rng: &mut impl Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

/// Random centered regression data with a sparse low-rank signal plus noise.
pub fn random_data(rng: &mut impl Rng, n: usize, p: usize, q: usize) -> DataPair {
    let x = normal(rng, n, p);
    let mut b = normal(rng, p, 2) * normal(rng, 2, q);
    for i in 0..p {
        if rng.random_bool(0.4) {
            b.row_mut(i).fill(0.0);
        }
    }
    let y = &x * b + normal(rng, n, q) * 0.5;
    DataPair::new(x, y).unwrap().center_columns()
}

/// Random contiguous partition of `p` predictors into 1..=3 groups.
pub fn random_groups(rng: &mut impl Rng, p: usize) -> GroupPartition {
    let k = rng.random_range(1..=3.min(p));
    let mut sizes = vec![1; k];
    for _ in k..p {
        sizes[rng.random_range(0..k)] += 1;
    }
    GroupPartition::contiguous(&sizes).unwrap()
}

pub fn random_orthonormal(rng: &mut impl Rng, q: usize, r: usize) -> Matrix {
    normal(rng, q, r).qr().q()
}

/// Partial residual `Q_i = YD − Σ_{l≠i} x_l C_l`, computed from scratch.
pub fn partial_residual(data: &DataPair, c: &Matrix, d: &Matrix, i: usize) -> Matrix {
    let mut q = data.y() * d;
    for l in 0..data.p() {
        if l != i {
            q -= data.x().column(l) * c.row(l);
        }
    }
    q
}

/// `s_i = A_i C⁽ᵏ⁾ − A_ii C_i`, computed from scratch.
pub fn cross_term(
    groups: &GroupPartition,
    penalty: &PenaltySet,
    c: &Matrix,
    i: usize,
) -> Vec<f64> {
    let k = groups.group_of(i);
    let a = penalty.matrix(k);
    let local = groups.local_index(i);
    let mut s = vec![0.0; c.ncols()];
    for (l, &j) in groups.members(k).iter().enumerate() {
        if l != local {
            for (col, s_col) in s.iter_mut().enumerate() {
                *s_col += a[(local, l)] * c[(j, col)];
            }
        }
    }
    s
}

/// One-row objective `½‖Q − x cᵀ‖² + λ‖c‖ + (θ/2)(a_ii‖c‖² + 2 sᵀc)`
/// minimized by damped Newton on the smoothed norm `√(‖c‖² + ε²)`.
pub struct OneRow<'a> {
    pub q: &'a Matrix,
    pub x: Vec<f64>,
    pub lambda: f64,
    pub theta: f64,
    pub a_ii: f64,
    pub s: Vec<f64>,
}

impl OneRow<'_> {
    pub fn value(&self, c: &[f64], eps: f64) -> f64 {
        let mut loss = 0.0;
        for row in 0..self.q.nrows() {
            for col in 0..self.q.ncols() {
                let e = self.q[(row, col)] - self.x[row] * c[col];
                loss += e * e;
            }
        }
        let sq: f64 = c.iter().map(|v| v * v).sum();
        let sc: f64 = self.s.iter().zip(c).map(|(a, b)| a * b).sum();
        0.5 * loss
            + self.lambda * (sq + eps * eps).sqrt()
            + 0.5 * self.theta * (self.a_ii * sq + 2.0 * sc)
    }

    pub fn minimize(&self) -> Vec<f64> {
        let eps = 1e-9;
        let r = self.q.ncols();
        let xtx: f64 = self.x.iter().map(|v| v * v).sum();
        let curv = xtx + self.theta * self.a_ii;
        let xq: Vec<f64> = (0..r)
            .map(|col| (0..self.q.nrows()).map(|row| self.x[row] * self.q[(row, col)]).sum())
            .collect();
        // smooth minimizer without the norm term as the starting point
        let mut c: Vec<f64> = (0..r)
            .map(|col| (xq[col] - self.theta * self.s[col]) / curv)
            .collect();
        for _ in 0..500 {
            let sq: f64 = c.iter().map(|v| v * v).sum();
            let rho = (sq + eps * eps).sqrt();
            let grad: Vec<f64> = (0..r)
                .map(|j| {
                    curv * c[j] - xq[j] + self.theta * self.s[j] + self.lambda * c[j] / rho
                })
                .collect();
            let mut hess = Matrix::zeros(r, r);
            for a in 0..r {
                for b in 0..r {
                    let id = if a == b { 1.0 } else { 0.0 };
                    hess[(a, b)] = curv * id + self.lambda * (id / rho - c[a] * c[b] / rho.powi(3));
                }
            }
            let step = hess
                .lu()
                .solve(&pcrrr::Vector::from_vec(grad.clone()))
                .expect("Hessian is positive definite");
            let f0 = self.value(&c, eps);
            let mut t = 1.0;
            let mut next = c.clone();
            loop {
                for j in 0..r {
                    next[j] = c[j] - t * step[j];
                }
                if self.value(&next, eps) <= f0 || t < 1e-20 {
                    break;
                }
                t *= 0.5;
            }
            let moved: f64 = next.iter().zip(&c).map(|(a, b)| (a - b).powi(2)).sum();
            c = next;
            if moved.sqrt() < 1e-15 {
                break;
            }
        }
        c
    }
}
