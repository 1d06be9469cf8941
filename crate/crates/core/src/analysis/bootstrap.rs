use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::regress::{r2_score, Dataset, Predictor, TrainerSpec};
use crate::seed;
use crate::stats::percentile_sorted;
use crate::table::split::stratified_indices;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BootstrapConfig {
    pub iters: usize,
    /// Share of rows drawn without replacement per iteration.
    pub frac: f64,
    pub level: f64,
    /// Test share inside each draw.
    pub test_frac: f64,
    pub n_bins: usize,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig { iters: 100, frac: 0.75, level: 0.95, test_frac: 0.2, n_bins: 10, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapCi {
    /// Test R² of one fit on the full data under the same split rule.
    pub point: f64,
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
    /// One test R² per iteration, in iteration order.
    pub samples: Vec<f64>,
}

/// Rows drawn per iteration: `floor(frac * n)`.
pub fn draw_size(n: usize, frac: f64) -> usize {
    (frac * n as f64).floor() as usize
}

/// Stratified train/test split of `idx`, a fit, and the test R².
fn split_fit_score(data: &Dataset, idx: &[usize], trainer: &TrainerSpec, cfg: &BootstrapConfig, split_seed: u64, fit_seed: u64) -> Result<f64> {
    let y: Vec<f64> = idx.iter().map(|&i| data.y[i]).collect();
    let (tr, te, _) = stratified_indices(&y, cfg.test_frac, cfg.n_bins.min(y.len()), split_seed);
    if tr.len() < 2 || te.len() < 2 {
        return Err(Error::invalid(format!("a draw of {} rows is too small to split", idx.len())));
    }
    let map = |v: &[usize]| v.iter().map(|&p| idx[p]).collect::<Vec<_>>();
    let (xt, yt) = data.rows(&map(&tr));
    let (xs, ys) = data.rows(&map(&te));
    let m = trainer.fit(&xt, &yt, fit_seed)?;
    r2_score(&ys, &m.predict_rows(&xs))
}

/// Percentile interval of the test R² over repeated subsample refits.
/// Iteration `i` uses seeds derived from `(cfg.seed, i)` only, so results do
/// not depend on the thread count.
pub fn bootstrap_r2_ci(data: &Dataset, trainer: &TrainerSpec, cfg: &BootstrapConfig) -> Result<BootstrapCi> {
    if !(cfg.frac > 0.0 && cfg.frac <= 1.0) {
        return Err(Error::invalid(format!("bootstrap frac {} outside (0, 1]", cfg.frac)));
    }
    if cfg.iters < 2 {
        return Err(Error::invalid(format!("bootstrap needs at least 2 iterations, got {}", cfg.iters)));
    }
    if !(cfg.level > 0.0 && cfg.level < 1.0) {
        return Err(Error::invalid(format!("confidence level {} outside (0, 1)", cfg.level)));
    }
    if !(cfg.test_frac > 0.0 && cfg.test_frac < 1.0) || cfg.n_bins == 0 {
        return Err(Error::invalid("test_frac must be in (0, 1) and n_bins positive"));
    }
    let n = data.n();
    let draw = draw_size(n, cfg.frac);
    if draw < 4 {
        return Err(Error::invalid(format!("a draw of {draw} rows is too small to split")));
    }
    let samples = (0..cfg.iters)
        .into_par_iter()
        .map(|i| {
            let i = i as u64;
            let mut idx = sample(&mut seed::rng(seed::derive_indexed(cfg.seed, "bootstrap-draw", i)), n, draw).into_vec();
            idx.sort_unstable();
            split_fit_score(
                data,
                &idx,
                trainer,
                cfg,
                seed::derive_indexed(cfg.seed, "bootstrap-split", i),
                seed::derive_indexed(cfg.seed, "bootstrap-fit", i),
            )
        })
        .collect::<Result<Vec<f64>>>()?;
    let all: Vec<usize> = (0..n).collect();
    let point = split_fit_score(data, &all, trainer, cfg, seed::derive(cfg.seed, "test-split"), seed::derive(cfg.seed, "final"))?;
    let mut sorted = samples.clone();
    sorted.sort_by(f64::total_cmp);
    let tail = (1.0 - cfg.level) / 2.0;
    Ok(BootstrapCi {
        point,
        lower: percentile_sorted(&sorted, tail),
        upper: percentile_sorted(&sorted, 1.0 - tail),
        level: cfg.level,
        samples,
    })
}

/// Equal-width histogram of the samples as `(low edge, high edge, count)`.
pub fn histogram(samples: &[f64], bins: usize) -> Vec<(f64, f64, usize)> {
    if samples.is_empty() || bins == 0 {
        return Vec::new();
    }
    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let mut counts = vec![0; bins];
    for &s in samples {
        counts[(((s - lo) / w) as usize).min(bins - 1)] += 1;
    }
    counts.into_iter().enumerate().map(|(b, c)| (lo + b as f64 * w, lo + (b + 1) as f64 * w, c)).collect()
}
