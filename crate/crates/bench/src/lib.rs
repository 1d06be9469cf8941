//! Shared fixtures for the benchmarks.

use fracflow_core::seed;
use fracflow_core::synthgen::{generate_synth_db, SynthConfig};
use fracflow_core::{FieldTable, Matrix};
use rand::Rng;

pub fn uniform_matrix(n: usize, m: usize, seed_v: u64) -> Matrix {
    let mut rng = seed::rng(seed_v);
    Matrix::from_fn(n, m, |_, _| rng.random::<f64>())
}

/// `y = sin(6 x0) + 2 x1 x2 + noise` over uniform features.
pub fn regression_fixture(n: usize, m: usize, seed_v: u64) -> (Matrix, Vec<f64>) {
    let x = uniform_matrix(n, m, seed_v);
    let mut rng = seed::rng(seed_v ^ 1);
    let y = (0..n)
        .map(|i| {
            let r = x.row(i);
            (6.0 * r[0]).sin() + 2.0 * r[1] * r[2] + 0.1 * rng.random::<f64>()
        })
        .collect();
    (x, y)
}

/// Synthetic table with the default column layout and `n_wells` rows.
pub fn synth_table(n_wells: usize) -> FieldTable {
    let cfg = SynthConfig { n_wells, n_fields: 10, ..SynthConfig::default() };
    generate_synth_db(&cfg, 7).expect("valid config").0
}
