//! Shared fixtures for the benchmarks.

use pcrrr::simgen::{generate, Scenario, SimulatedData};

/// One replication of the study design, centered for direct fitting.
pub fn fixture(grouped: bool, p: usize, n: usize) -> SimulatedData {
    let mut sim = generate(&Scenario::new(grouped, p, n, 0.1), 42).expect("valid scenario");
    sim.train = sim.train.center_columns();
    sim
}
