//! Isolation-forest anomaly scores and kurtosis screening.

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnomalyScores {
    /// Per row, in (0, 1]; larger is more anomalous.
    pub scores: Vec<f64>,
    pub n_trees: usize,
    pub subsample: usize,
}

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Harmonic number H(n); exact summation up to 1000, asymptotic beyond.
pub fn harmonic(n: usize) -> f64 {
    if n <= 1000 {
        (1..=n).map(|i| 1.0 / i as f64).sum()
    } else {
        let x = n as f64;
        x.ln() + EULER_GAMMA + 1.0 / (2.0 * x) - 1.0 / (12.0 * x * x)
    }
}

/// Average path length of an unsuccessful search in a binary search tree of
/// `n` points: `2H(n-1) - 2(n-1)/n`, with c(1) = 0.
pub fn average_path_length(n: usize) -> f64 {
    if n <= 1 {
        return 0.0;
    }
    2.0 * harmonic(n - 1) - 2.0 * (n - 1) as f64 / n as f64
}

enum Node {
    Leaf { size: usize },
    Split { feature: usize, value: f64, left: Box<Node>, right: Box<Node> },
}

fn build(points: &Matrix, rows: &mut [usize], depth: usize, limit: usize, rng: &mut seed::Rng) -> Node {
    if rows.len() <= 1 || depth >= limit {
        return Node::Leaf { size: rows.len() };
    }
    let d = points.cols();
    let ranges: Vec<(usize, f64, f64)> = (0..d)
        .filter_map(|f| {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for &r in rows.iter() {
                let v = points.get(r, f);
                lo = lo.min(v);
                hi = hi.max(v);
            }
            (hi > lo).then_some((f, lo, hi))
        })
        .collect();
    if ranges.is_empty() {
        return Node::Leaf { size: rows.len() };
    }
    let (feature, lo, hi) = ranges[rng.random_range(0..ranges.len())];
    let value = rng.random_range(lo..hi);
    let mut split = 0;
    for i in 0..rows.len() {
        if points.get(rows[i], feature) < value {
            rows.swap(i, split);
            split += 1;
        }
    }
    let (l, r) = rows.split_at_mut(split);
    Node::Split {
        feature,
        value,
        left: Box::new(build(points, l, depth + 1, limit, rng)),
        right: Box::new(build(points, r, depth + 1, limit, rng)),
    }
}

fn path_length(node: &Node, x: &[f64], depth: usize) -> f64 {
    match node {
        Node::Leaf { size } => depth as f64 + average_path_length(*size),
        Node::Split { feature, value, left, right } => {
            if x[*feature] < *value {
                path_length(left, x, depth + 1)
            } else {
                path_length(right, x, depth + 1)
            }
        }
    }
}

/// Isolation-forest scores `2^(-E[h(x)] / c(subsample))`. Each tree isolates
/// a seeded subsample (drawn without replacement) by random axis splits
/// drawn uniformly within the node's range of a non-constant feature, down to
/// depth `ceil(log2 subsample)`.
pub fn isolation_forest_scores(points: &Matrix, n_trees: usize, subsample: usize, seed: u64) -> Result<AnomalyScores> {
    let n = points.rows();
    if n_trees == 0 {
        return Err(Error::invalid("n_trees must be at least 1"));
    }
    if subsample < 2 || subsample > n {
        return Err(Error::invalid(format!("subsample {subsample} outside 2..={n}")));
    }
    let limit = (subsample as f64).log2().ceil() as usize;
    let trees: Vec<Node> = (0..n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = seed::rng(seed::derive_indexed(seed, "iforest-tree", t as u64));
            let mut rows = sample(&mut rng, n, subsample).into_vec();
            rows.sort_unstable();
            build(points, &mut rows, 0, limit, &mut rng)
        })
        .collect();
    let c = average_path_length(subsample);
    let scores = (0..n)
        .into_par_iter()
        .map(|i| {
            let x = points.row(i);
            let total: f64 = trees.iter().map(|t| path_length(t, x, 0)).sum();
            2f64.powf(-(total / n_trees as f64) / c)
        })
        .collect();
    Ok(AnomalyScores { scores, n_trees, subsample })
}

/// Excess kurtosis `m4 / m2² - 3` with population moments.
pub fn kurtosis(values: &[f64]) -> Result<f64> {
    if values.len() < 4 {
        return Err(Error::invalid(format!("kurtosis needs at least 4 values, got {}", values.len())));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let (mut m2, mut m4) = (0.0, 0.0);
    for v in values {
        let d = (v - mean) * (v - mean);
        m2 += d;
        m4 += d * d;
    }
    m2 /= n;
    m4 /= n;
    // rounding noise around a constant is not variance
    if m2 <= (4.0 * f64::EPSILON * mean.abs()).powi(2) {
        return Err(Error::DegenerateColumn);
    }
    Ok(m4 / (m2 * m2) - 3.0)
}
