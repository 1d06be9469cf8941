//! Exhaustive depth × L2 grid search for boosting.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cv::{mean_std, CvConfig, CvPlan, Dataset};
use super::gbdt::GbdtParams;
use super::metrics::r2_score;
use super::model::{FittedModel, GbdtSplit, Model, ModelSpec, Predictor, TrainerSpec};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub depth: Vec<usize>,
    pub l2_leaf: Vec<f64>,
}

impl GridSpec {
    /// Depth 2 to 16 and L2 from 0 to 2 in steps of 0.1.
    pub fn full_default() -> Self {
        GridSpec {
            depth: (2..=16).collect(),
            l2_leaf: (0..=20).map(|i| i as f64 / 10.0).collect(),
        }
    }

    /// Cells in tie-break order: depth ascending, then L2 ascending.
    pub fn cells(&self) -> Vec<(usize, f64)> {
        let mut d = self.depth.clone();
        d.sort_unstable();
        d.dedup();
        let mut l = self.l2_leaf.clone();
        l.sort_by(f64::total_cmp);
        l.dedup();
        d.iter().flat_map(|&a| l.iter().map(move |&b| (a, b))).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub depth: usize,
    pub l2_leaf: f64,
    pub fold_r2: Vec<f64>,
    pub mean_r2: f64,
    pub std_r2: f64,
    /// Mean number of trees kept after early stopping.
    pub mean_trees: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub best: GbdtParams,
    pub best_index: usize,
    pub cells: Vec<GridCell>,
}

struct FoldData {
    split: GbdtSplit,
    x: Matrix,
    y: Vec<f64>,
}

/// Evaluate every (depth, l2) cell by k-fold CV mean R², using the same rows,
/// seeds and inner validation splits as [`super::cv::kfold_cv`] would for the
/// trainer with that cell's parameters. The highest mean wins; ties go to the
/// smaller depth, then the smaller L2.
pub fn grid_search(data: &Dataset, grid: &GridSpec, trainer: &TrainerSpec, cfg: &CvConfig) -> Result<GridResult> {
    let ModelSpec::Gbdt { params: base, val_frac } = trainer.model else {
        return Err(Error::invalid("grid search applies to the gbdt model only"));
    };
    let cells = grid.cells();
    if cells.is_empty() {
        return Err(Error::invalid("grid has no cells"));
    }
    let plan = CvPlan::new(&data.y, cfg)?;
    let y_fit: Vec<f64> = if trainer.log_target {
        if data.y.iter().any(|&v| v <= -1.0) {
            return Err(Error::invalid("log target needs y > -1"));
        }
        data.y.iter().map(|v| v.ln_1p()).collect()
    } else {
        data.y.clone()
    };
    let folds = (0..cfg.k)
        .map(|f| {
            let tr = plan.train_rows(f);
            let xt = data.x.select_rows(&tr);
            let yt: Vec<f64> = tr.iter().map(|&i| y_fit[i]).collect();
            let (x, y) = data.rows(&plan.folds[f]);
            let split = GbdtSplit::new(&xt, &yt, base, val_frac, seed::derive_indexed(cfg.seed, "fold", f as u64))?;
            Ok(FoldData { split, x, y })
        })
        .collect::<Result<Vec<_>>>()?;
    let scored = cells
        .par_iter()
        .map(|&(depth, l2_leaf)| {
            let params = GbdtParams { depth, l2_leaf, ..base };
            let mut fold_r2 = Vec::with_capacity(folds.len());
            let mut trees = 0usize;
            for fd in &folds {
                let g = fd.split.fit(params)?;
                trees += g.best_iteration;
                let fitted = FittedModel { model: Model::Gbdt(g), log_target: trainer.log_target };
                fold_r2.push(r2_score(&fd.y, &fitted.predict_rows(&fd.x))?);
            }
            let (mean_r2, std_r2) = mean_std(&fold_r2);
            Ok(GridCell {
                depth,
                l2_leaf,
                fold_r2,
                mean_r2,
                std_r2,
                mean_trees: trees as f64 / folds.len() as f64,
            })
        })
        .collect::<Result<Vec<GridCell>>>()?;
    let mut best_index = 0;
    for (i, c) in scored.iter().enumerate() {
        if c.mean_r2 > scored[best_index].mean_r2 {
            best_index = i;
        }
    }
    let b = &scored[best_index];
    Ok(GridResult {
        best: GbdtParams { depth: b.depth, l2_leaf: b.l2_leaf, ..base },
        best_index,
        cells: scored,
    })
}

pub fn write_grid_csv(result: &GridResult, path: &std::path::Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["depth", "l2_leaf", "mean_r2", "std_r2", "mean_trees", "selected"])?;
    for (i, c) in result.cells.iter().enumerate() {
        w.write_record([
            c.depth.to_string(),
            c.l2_leaf.to_string(),
            c.mean_r2.to_string(),
            c.std_r2.to_string(),
            c.mean_trees.to_string(),
            u8::from(i == result.best_index).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
