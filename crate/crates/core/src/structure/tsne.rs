//! Exact t-SNE embedding into two dimensions.

use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{squared_distance, Matrix};
use crate::seed;

pub const EXAGGERATION: f64 = 12.0;
pub const EXAGGERATION_ITERS: usize = 250;
const PERPLEXITY_TOL: f64 = 1e-6;
const MAX_BISECTIONS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TsneParams {
    pub perplexity: f64,
    pub learning_rate: f64,
    pub iters: usize,
    pub seed: u64,
}

impl Default for TsneParams {
    fn default() -> Self {
        TsneParams {
            perplexity: 30.0,
            learning_rate: 200.0,
            iters: 1000,
            seed: 0,
        }
    }
}

/// Conditional affinities `p_{j|i}` (row-major `n × n`) with per-point
/// Gaussian precision found by bisection, and the perplexity each row
/// attains.
pub fn calibrate_affinities(points: &Matrix, perplexity: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = points.rows();
    if n < 3 {
        return Err(Error::invalid(format!("t-SNE needs at least 3 points, got {n}")));
    }
    if !(perplexity > 0.0) || perplexity >= n as f64 {
        return Err(Error::invalid(format!("perplexity {perplexity} must be in (0, {n})")));
    }
    let rows: Vec<(Vec<f64>, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let d: Vec<f64> = (0..n)
                .map(|j| squared_distance(points.row(i), points.row(j)))
                .collect();
            calibrate_row(&d, i, perplexity)
        })
        .collect();
    let mut p = Vec::with_capacity(n * n);
    let mut perp = Vec::with_capacity(n);
    for (row, pr) in rows {
        p.extend(row);
        perp.push(pr);
    }
    Ok((p, perp))
}

fn calibrate_row(d: &[f64], i: usize, target: f64) -> (Vec<f64>, f64) {
    let dmin = d
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, &v)| v)
        .fold(f64::INFINITY, f64::min);
    let eval = |beta: f64| -> (Vec<f64>, f64) {
        let mut p: Vec<f64> = d
            .iter()
            .enumerate()
            .map(|(j, &v)| if j == i { 0.0 } else { (-beta * (v - dmin)).exp() })
            .collect();
        let z: f64 = p.iter().sum();
        let mut h = z.ln();
        for (pj, &v) in p.iter_mut().zip(d) {
            *pj /= z;
            h += beta * (v - dmin) * *pj;
        }
        (p, h.exp())
    };
    let (mut lo, mut hi) = (0.0f64, f64::INFINITY);
    let mut beta = 1.0;
    let mut best = eval(beta);
    for _ in 0..MAX_BISECTIONS {
        if (best.1 - target).abs() < PERPLEXITY_TOL {
            break;
        }
        if best.1 > target {
            lo = beta;
            beta = if hi.is_finite() { 0.5 * (lo + hi) } else { beta * 2.0 };
        } else {
            hi = beta;
            beta = 0.5 * (lo + hi);
        }
        best = eval(beta);
    }
    best
}

/// Exact t-SNE: symmetrized Gaussian affinities, Student-t kernel in the
/// plane, gradient descent with per-coordinate gains, momentum 0.5 then 0.8
/// and early exaggeration for the first 250 iterations.
pub fn tsne_embed(points: &Matrix, params: TsneParams) -> Result<Matrix> {
    let n = points.rows();
    let (cond, _) = calibrate_affinities(points, params.perplexity)?;
    let mut p = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            p[i * n + j] = ((cond[i * n + j] + cond[j * n + i]) / (2.0 * n as f64)).max(1e-300);
        }
        p[i * n + i] = 0.0;
    }
    drop(cond);

    let mut rng = seed::rng(seed::derive(params.seed, "tsne-init"));
    let normal = Normal::new(0.0, 1e-4).expect("valid normal");
    let mut y: Vec<[f64; 2]> = (0..n)
        .map(|_| [normal.sample(&mut rng), normal.sample(&mut rng)])
        .collect();
    let mut update = vec![[0.0f64; 2]; n];
    let mut gains = vec![[1.0f64; 2]; n];
    let mut num = vec![0.0; n * n];

    for it in 0..params.iters {
        let exag = if it < EXAGGERATION_ITERS { EXAGGERATION } else { 1.0 };
        let momentum = if it < EXAGGERATION_ITERS { 0.5 } else { 0.8 };
        let row_sums: Vec<f64> = num
            .par_chunks_mut(n)
            .enumerate()
            .map(|(i, row)| {
                let yi = y[i];
                let mut s = 0.0;
                for (j, v) in row.iter_mut().enumerate() {
                    if j == i {
                        *v = 0.0;
                        continue;
                    }
                    let dx = yi[0] - y[j][0];
                    let dy = yi[1] - y[j][1];
                    *v = 1.0 / (1.0 + dx * dx + dy * dy);
                    s += *v;
                }
                s
            })
            .collect();
        let z: f64 = row_sums.iter().sum();
        let grads: Vec<[f64; 2]> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut g = [0.0; 2];
                let yi = y[i];
                for j in 0..n {
                    let w = num[i * n + j];
                    let m = (exag * p[i * n + j] - w / z) * w;
                    g[0] += m * (yi[0] - y[j][0]);
                    g[1] += m * (yi[1] - y[j][1]);
                }
                [4.0 * g[0], 4.0 * g[1]]
            })
            .collect();
        for i in 0..n {
            for c in 0..2 {
                let g = grads[i][c];
                gains[i][c] = if (g > 0.0) != (update[i][c] > 0.0) {
                    gains[i][c] + 0.2
                } else {
                    (gains[i][c] * 0.8).max(0.01)
                };
                update[i][c] = momentum * update[i][c] - params.learning_rate * gains[i][c] * g;
                y[i][c] += update[i][c];
            }
        }
        let cx = y.iter().map(|v| v[0]).sum::<f64>() / n as f64;
        let cy = y.iter().map(|v| v[1]).sum::<f64>() / n as f64;
        for v in &mut y {
            v[0] -= cx;
            v[1] -= cy;
        }
    }
    Ok(Matrix::from_fn(n, 2, |i, c| y[i][c]))
}
