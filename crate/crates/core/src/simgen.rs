//! Synthetic scenarios with a sparse rank-3 coefficient matrix.
//!
//! Signal predictors come from blocks `Σ_{i=1}^{3} i·u_i v_iᵀ + E_X` (approximately
//! rank three); the remaining predictors are independent standard normal.
//! The nonzero rows of `C` are the top three principal loading vectors of
//! each (column-centered) training signal block, `D` is the orthonormal factor
//! of a QR decomposition of a standard normal q×3 matrix, and
//! `Y = X C Dᵀ + E` with standard normal `E`.
//!
//! The loading directions `v_i` of each signal block are part of the truth and
//! shared by training and test data, so both are independent draws of rows
//! from the same distribution. Scores `u_i` and `E_X` are drawn per data set.
//!
//! Generation order for a given seed (all draws column-major):
//!
//! 1. stream 0: the q×3 normal matrix for `D`, then the p×3 loadings of each
//!    signal block in predictor order;
//! 2. stream 1: training design blocks in predictor order, then training `E`;
//! 3. stream 2: test design blocks in predictor order, then test `E`.
//!
//! Within a signal block the design draws are `u_1, u_2, u_3, E_X`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::thin_svd;
use crate::model::{DataPair, FactorPair, GroupPartition, Matrix};

pub const RESPONSES: usize = 5;
pub const TRUE_RANK: usize = 3;
pub const GENERATED_GROUPS: usize = 10;
pub const SIGNAL_GROUPS: usize = 5;

const TRUTH_STREAM: u64 = 0;
const TRAIN_STREAM: u64 = 1;
const TEST_STREAM: u64 = 2;

/// One cell of the simulation design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub grouped: bool,
    pub p: usize,
    pub n: usize,
    pub n_test: usize,
    /// Fraction of nonzero coefficient rows.
    pub tau: f64,
    pub q: usize,
    pub r_true: usize,
}

impl Scenario {
    pub fn new(grouped: bool, p: usize, n: usize, tau: f64) -> Self {
        Self {
            grouped,
            p,
            n,
            n_test: n,
            tau,
            q: RESPONSES,
            r_true: TRUE_RANK,
        }
    }

    /// Number of nonzero rows, `p·τ`.
    pub fn p0(&self) -> usize {
        (self.p as f64 * self.tau).round() as usize
    }

    /// Nonzero rows per signal group in the grouped design.
    pub fn signal_per_group(&self) -> usize {
        self.p0() / SIGNAL_GROUPS
    }

    pub fn group_size(&self) -> usize {
        self.p / GENERATED_GROUPS
    }

    pub fn label(&self) -> String {
        format!(
            "{}-p{}-n{}-tau{}",
            if self.grouped { "grouped" } else { "ungrouped" },
            self.p,
            self.n,
            self.tau
        )
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n == 0 || self.n_test == 0 || self.q < self.r_true || self.r_true == 0 {
            return bad(format!("degenerate scenario {}", self.label()));
        }
        let exact = self.p as f64 * self.tau;
        if (exact - exact.round()).abs() > 1e-9 || self.p0() == 0 || self.p0() > self.p {
            return bad(format!("p·tau = {exact} is not a valid row count"));
        }
        if self.grouped {
            if !self.p.is_multiple_of(GENERATED_GROUPS) || !self.p0().is_multiple_of(SIGNAL_GROUPS) {
                return bad(format!(
                    "grouped design needs p divisible by {GENERATED_GROUPS} and p0 by {SIGNAL_GROUPS}"
                ));
            }
            if self.signal_per_group() > self.group_size() {
                return bad("signal rows exceed group size".into());
            }
        }
        Ok(())
    }

    /// Partition used by estimators: ten equal contiguous groups when
    /// grouped, a single group otherwise.
    pub fn partition(&self) -> GroupPartition {
        if self.grouped {
            GroupPartition::contiguous(&[self.group_size(); GENERATED_GROUPS])
                .expect("group sizes are positive")
        } else {
            GroupPartition::single(self.p)
        }
    }
}

/// The 36 design cells: structure × p × n × τ, in that nesting order
/// (ungrouped before grouped, then ascending p, n and τ).
pub fn scenario_grid() -> Vec<Scenario> {
    let mut out = Vec::with_capacity(36);
    for grouped in [false, true] {
        for p in [200, 400] {
            for n in [100, 500, 1000] {
                for tau in [0.1, 0.2, 0.25] {
                    out.push(Scenario::new(grouped, p, n, tau));
                }
            }
        }
    }
    out
}

/// Seed for one replication of one scenario (SplitMix64 mixing).
pub fn replication_seed(base: u64, scenario_index: usize, replication: usize) -> u64 {
    let tag = ((scenario_index as u64) << 32) ^ replication as u64;
    splitmix64(base ^ splitmix64(tag))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn normal_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

/// Loading directions `v_1, v_2, v_3` of a signal block, as columns.
pub fn signal_loadings<R: Rng>(rng: &mut R, cols: usize) -> Matrix {
    normal_matrix(rng, cols, 3)
}

/// `Σ_{i=1}^{3} i·u_i v_iᵀ` for fresh scores `u_i`, plus standard normal
/// noise when `with_noise`.
pub fn signal_from_loadings<R: Rng>(
    rng: &mut R,
    n: usize,
    loadings: &Matrix,
    with_noise: bool,
) -> Matrix {
    let mut x = Matrix::zeros(n, loadings.nrows());
    for (i, v) in loadings.column_iter().enumerate() {
        let u = normal_matrix(rng, n, 1);
        x.ger((i + 1) as f64, &u.column(0), &v, 1.0);
    }
    if with_noise {
        x += normal_matrix(rng, n, loadings.nrows());
    }
    x
}

/// A signal block with its own loadings.
pub fn signal_block<R: Rng>(rng: &mut R, n: usize, cols: usize, with_noise: bool) -> Matrix {
    let loadings = signal_loadings(rng, cols);
    signal_from_loadings(rng, n, &loadings, with_noise)
}

/// Seeded convenience wrapper around [`signal_block`].
pub fn gen_signal_block(n: usize, cols: usize, seed: u64) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    signal_block(&mut rng, n, cols, true)
}

/// Top `k` right singular vectors of the column-centered block (p×k).
fn leading_loadings(block: &Matrix, k: usize) -> Matrix {
    let mut centered = block.clone();
    for mut col in centered.column_iter_mut() {
        let mean = col.mean();
        col.add_scalar_mut(-mean);
    }
    let (_, _, v_t) = thin_svd(&centered);
    v_t.rows(0, k).transpose()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub factors: FactorPair,
    /// Indices of the nonzero rows of `C`, ascending.
    pub nonzero_rows: Vec<usize>,
}

impl GroundTruth {
    pub fn coefficients(&self) -> Matrix {
        self.factors.coefficients()
    }
}

#[derive(Debug, Clone)]
pub struct SimulatedData {
    pub train: DataPair,
    pub test: DataPair,
    pub truth: GroundTruth,
    pub groups: GroupPartition,
}

/// Column layout of the design: `(start, width, is_signal)` blocks.
fn layout(scenario: &Scenario) -> Vec<(usize, usize, bool)> {
    if !scenario.grouped {
        let p0 = scenario.p0();
        let mut blocks = vec![(0, p0, true)];
        if p0 < scenario.p {
            blocks.push((p0, scenario.p - p0, false));
        }
        return blocks;
    }
    let size = scenario.group_size();
    let k0 = scenario.signal_per_group();
    let mut blocks = Vec::new();
    for g in 0..GENERATED_GROUPS {
        let start = g * size;
        if g < SIGNAL_GROUPS {
            blocks.push((start, k0, true));
            if k0 < size {
                blocks.push((start + k0, size - k0, false));
            }
        } else {
            blocks.push((start, size, false));
        }
    }
    blocks
}

fn draw_design<R: Rng>(
    rng: &mut R,
    n: usize,
    p: usize,
    blocks: &[(usize, usize, bool)],
    loadings: &[Matrix],
) -> Matrix {
    let mut x = Matrix::zeros(n, p);
    let mut next = loadings.iter();
    for &(start, width, signal) in blocks {
        let block = if signal {
            let v = next.next().expect("one loading matrix per signal block");
            signal_from_loadings(rng, n, v, true)
        } else {
            normal_matrix(rng, n, width)
        };
        x.columns_mut(start, width).copy_from(&block);
    }
    x
}

/// Generates training data, independent test data and the shared truth.
pub fn generate(scenario: &Scenario, seed: u64) -> Result<SimulatedData> {
    scenario.validate()?;
    let (p, q, r) = (scenario.p, scenario.q, scenario.r_true);
    let blocks = layout(scenario);

    let mut truth_rng = stream(seed, TRUTH_STREAM);
    let g = normal_matrix(&mut truth_rng, q, r);
    let d = g.qr().q();
    let loadings: Vec<Matrix> = blocks
        .iter()
        .filter(|b| b.2)
        .map(|&(_, width, _)| signal_loadings(&mut truth_rng, width))
        .collect();

    let mut train_rng = stream(seed, TRAIN_STREAM);
    let x_train = draw_design(&mut train_rng, scenario.n, p, &blocks, &loadings);
    let e_train = normal_matrix(&mut train_rng, scenario.n, q);

    let mut c = Matrix::zeros(p, r);
    let mut nonzero_rows = Vec::new();
    for &(start, width, signal) in &blocks {
        if signal {
            let loadings = leading_loadings(&x_train.columns(start, width).into_owned(), r);
            c.rows_mut(start, width).copy_from(&loadings);
            nonzero_rows.extend(start..start + width);
        }
    }
    let truth = GroundTruth {
        factors: FactorPair { c, d },
        nonzero_rows,
    };
    let b = truth.coefficients();

    let mut test_rng = stream(seed, TEST_STREAM);
    let x_test = draw_design(&mut test_rng, scenario.n_test, p, &blocks, &loadings);
    let e_test = normal_matrix(&mut test_rng, scenario.n_test, q);

    let y_train = &x_train * &b + e_train;
    let y_test = &x_test * &b + e_test;
    Ok(SimulatedData {
        train: DataPair::new(x_train, y_train)?,
        test: DataPair::new(x_test, y_test)?,
        truth,
        groups: scenario.partition(),
    })
}

/// Ungrouped design; errors if the scenario is grouped.
pub fn gen_ungrouped(scenario: &Scenario, seed: u64) -> Result<SimulatedData> {
    if scenario.grouped {
        return Err(Error::InvalidConfig("expected an ungrouped scenario".into()));
    }
    generate(scenario, seed)
}

/// Ten-group design; errors if the scenario is ungrouped.
pub fn gen_grouped(scenario: &Scenario, seed: u64) -> Result<SimulatedData> {
    if !scenario.grouped {
        return Err(Error::InvalidConfig("expected a grouped scenario".into()));
    }
    generate(scenario, seed)
}
