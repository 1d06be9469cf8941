//! Bagged and randomized tree ensembles.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::binning::bin_features;
use super::tree::{canonical_rows, check_xy, GrowParams, Grower, TreeNode};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForestMode {
    RandomForest,
    ExtraTrees,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub n_trees: usize,
    pub depth: usize,
    pub min_leaf: usize,
    pub feature_frac: f64,
    /// Bootstrap rows for random forests; extra trees always use all rows.
    pub bootstrap: bool,
    pub max_bins: usize,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            depth: 12,
            min_leaf: 2,
            feature_frac: 0.5,
            bootstrap: true,
            max_bins: 255,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub mode: ForestMode,
    pub trees: Vec<TreeNode>,
}

impl ForestModel {
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict(x)).sum::<f64>() / self.trees.len() as f64
    }
}

/// Random forest (bootstrap rows, random feature subset per split) or extra
/// trees (all rows, one uniform random threshold per candidate feature).
/// Prediction averages the trees; every tree has its own derived seed.
pub fn fit_forest(x: &Matrix, y: &[f64], mode: ForestMode, params: ForestParams, seed: u64) -> Result<ForestModel> {
    check_xy(x, y)?;
    if params.n_trees == 0 {
        return Err(Error::invalid("n_trees must be at least 1"));
    }
    if !(params.feature_frac > 0.0 && params.feature_frac <= 1.0) {
        return Err(Error::invalid(format!("feature_frac {} outside (0, 1]", params.feature_frac)));
    }
    let binned = bin_features(x, params.max_bins);
    let base_rows = canonical_rows(x, y);
    let grow = GrowParams {
        max_depth: params.depth,
        min_leaf: params.min_leaf.max(1),
        l2: 0.0,
        feature_frac: params.feature_frac,
        random_thresholds: mode == ForestMode::ExtraTrees,
    };
    let n = x.rows();
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = seed::rng(seed::derive_indexed(seed, "forest-tree", t as u64));
            let mut rows: Vec<u32> = if mode == ForestMode::RandomForest && params.bootstrap {
                let mut r: Vec<u32> = (0..n).map(|_| rng.random_range(0..n as u32)).collect();
                r.sort_unstable();
                r
            } else {
                base_rows.clone()
            };
            let mut g = Grower::new(&binned, y, grow);
            g.raw = Some(x);
            g.rng = Some(&mut rng);
            g.grow(&mut rows)
        })
        .collect();
    Ok(ForestModel { mode, trees })
}
