//! Gradient-boosted regression trees with early stopping.

use serde::{Deserialize, Serialize};

use super::binning::{bin_features, Binned};
use super::metrics::r2_score;
use super::tree::{check_xy, GrowParams, Grower, TreeNode};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbdtParams {
    pub n_rounds: usize,
    pub depth: usize,
    pub l2_leaf: f64,
    pub learning_rate: f64,
    /// Rounds without validation improvement tolerated; 0 disables early stopping.
    pub od_wait: usize,
    pub min_leaf: usize,
    pub max_bins: usize,
}

impl Default for GbdtParams {
    fn default() -> Self {
        GbdtParams {
            n_rounds: 2000,
            depth: 7,
            l2_leaf: 0.6,
            learning_rate: 0.02,
            od_wait: 5,
            min_leaf: 5,
            max_bins: 255,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbdtModel {
    pub base_score: f64,
    pub trees: Vec<TreeNode>,
    pub learning_rate: f64,
    pub depth: usize,
    pub l2_leaf: f64,
    /// Number of leading trees used for prediction.
    pub best_iteration: usize,
    /// Validation R² after each round (round 0 = base score); `NaN` when
    /// the validation target is constant.
    pub validation_curve: Vec<f64>,
    /// Training MSE after each round (round 0 = base score).
    pub train_mse: Vec<f64>,
}

impl GbdtModel {
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.base_score
            + self.learning_rate
                * self.trees[..self.best_iteration]
                    .iter()
                    .map(|t| t.predict(x))
                    .sum::<f64>()
    }

    pub fn predict_matrix(&self, x: &Matrix) -> Vec<f64> {
        (0..x.rows()).map(|i| self.predict(x.row(i))).collect()
    }

    pub fn used_trees(&self) -> &[TreeNode] {
        &self.trees[..self.best_iteration]
    }
}

/// Patience-based early stopping on a score to maximize. Round 0 is the
/// starting point; a round counts as an improvement only when strictly
/// better than the best so far.
#[derive(Debug, Clone, PartialEq)]
pub struct EarlyStopper {
    od_wait: usize,
    best: f64,
    best_round: usize,
    round: usize,
}

impl EarlyStopper {
    pub fn new(od_wait: usize, initial: f64) -> Self {
        EarlyStopper {
            od_wait,
            best: initial,
            best_round: 0,
            round: 0,
        }
    }

    /// Record the next round's score; true when training should stop.
    pub fn update(&mut self, score: f64) -> bool {
        self.round += 1;
        if score > self.best {
            self.best = score;
            self.best_round = self.round;
        }
        self.od_wait > 0 && self.round - self.best_round >= self.od_wait
    }

    pub fn best_round(&self) -> usize {
        self.best_round
    }

    pub fn round(&self) -> usize {
        self.round
    }
}

fn check_params(p: &GbdtParams) -> Result<()> {
    if !(p.learning_rate > 0.0) || !(p.l2_leaf >= 0.0) || p.min_leaf == 0 {
        return Err(Error::invalid(format!(
            "invalid boosting parameters: learning_rate {}, l2_leaf {}, min_leaf {}",
            p.learning_rate, p.l2_leaf, p.min_leaf
        )));
    }
    Ok(())
}

/// Stagewise squared-error boosting. Each round fits a tree to the current
/// residuals with L2-shrunk leaf values and adds it scaled by the learning
/// rate. With `od_wait > 0`, training stops after `od_wait` rounds without a
/// strict improvement of the validation fit and the model keeps the trees up
/// to the best round.
pub fn fit_gbdt(xtrain: &Matrix, ytrain: &[f64], xval: &Matrix, yval: &[f64], params: GbdtParams) -> Result<GbdtModel> {
    check_xy(xtrain, ytrain)?;
    let binned = bin_features(xtrain, params.max_bins);
    fit_gbdt_binned(&binned, ytrain, xval, yval, params)
}

/// [`fit_gbdt`] on training features binned in advance.
pub fn fit_gbdt_binned(binned: &Binned, ytrain: &[f64], xval: &Matrix, yval: &[f64], params: GbdtParams) -> Result<GbdtModel> {
    check_params(&params)?;
    if binned.n != ytrain.len() || binned.n == 0 {
        return Err(Error::invalid("training features and targets disagree"));
    }
    if params.od_wait > 0 && yval.is_empty() {
        return Err(Error::MissingValidation);
    }
    if xval.rows() != yval.len() || (xval.rows() > 0 && xval.cols() != binned.d) {
        return Err(Error::invalid("validation features and targets disagree"));
    }
    let n = ytrain.len();
    let base = ytrain.iter().sum::<f64>() / n as f64;
    let mut pred = vec![base; n];
    let mut vpred = vec![base; yval.len()];
    let mut resid: Vec<f64> = ytrain.iter().map(|y| y - base).collect();
    let mut leaf = vec![0.0; n];
    let mse_of = |r: &[f64]| r.iter().map(|v| v * v).sum::<f64>() / r.len() as f64;
    let vmse = |vp: &[f64]| -> f64 {
        if yval.is_empty() {
            0.0
        } else {
            yval.iter().zip(vp).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / yval.len() as f64
        }
    };
    let vr2 = |vp: &[f64]| r2_score(yval, vp).unwrap_or(f64::NAN);
    let mut train_mse = vec![mse_of(&resid)];
    let mut curve = vec![vr2(&vpred)];
    // maximizing -MSE orders rounds exactly like validation R²
    let mut stopper = EarlyStopper::new(params.od_wait, -vmse(&vpred));
    let grow = GrowParams::exact(params.depth, params.min_leaf, params.l2_leaf);
    let mut trees = Vec::new();
    let mut rows: Vec<u32> = (0..n as u32).collect();
    for _ in 0..params.n_rounds {
        rows.iter_mut().enumerate().for_each(|(i, r)| *r = i as u32);
        let tree = {
            let mut g = Grower::new(binned, &resid, grow);
            g.leaf_out = Some(&mut leaf);
            g.grow(&mut rows)
        };
        for i in 0..n {
            pred[i] += params.learning_rate * leaf[i];
            resid[i] = ytrain[i] - pred[i];
        }
        for (i, vp) in vpred.iter_mut().enumerate() {
            *vp += params.learning_rate * tree.predict(xval.row(i));
        }
        trees.push(tree);
        train_mse.push(mse_of(&resid));
        curve.push(vr2(&vpred));
        if stopper.update(-vmse(&vpred)) {
            break;
        }
    }
    let best_iteration = if params.od_wait > 0 { stopper.best_round() } else { trees.len() };
    Ok(GbdtModel {
        base_score: base,
        trees,
        learning_rate: params.learning_rate,
        depth: params.depth,
        l2_leaf: params.l2_leaf,
        best_iteration,
        validation_curve: curve,
        train_mse,
    })
}
