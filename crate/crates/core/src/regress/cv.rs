//! Datasets, k-fold cross-validation and the held-out test score.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::r2_score;
use super::model::{FittedModel, Predictor, TrainerSpec};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seed;
use crate::table::split::stratified_indices;
use crate::table::FieldTable;

/// Dense feature matrix and target extracted from a table.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: Matrix,
    pub y: Vec<f64>,
    pub features: Vec<String>,
    pub target: String,
}

impl Dataset {
    /// Numeric input features of `table` and the named target. Every cell
    /// used must be observed.
    pub fn from_table(table: &FieldTable, target: &str) -> Result<Dataset> {
        let t = table.column_index(target)?;
        let cols: Vec<usize> = table.feature_indices().into_iter().filter(|&j| j != t).collect();
        Self::with_columns(table, &cols, target)
    }

    pub fn with_columns(table: &FieldTable, cols: &[usize], target: &str) -> Result<Dataset> {
        let t = table.column_index(target)?;
        Ok(Dataset {
            x: table.numeric_matrix(cols)?,
            y: table.numeric_vector(t)?,
            features: cols.iter().map(|&j| table.columns()[j].name().to_string()).collect(),
            target: target.to_string(),
        })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn rows(&self, idx: &[usize]) -> (Matrix, Vec<f64>) {
        (self.x.select_rows(idx), idx.iter().map(|&i| self.y[i]).collect())
    }

    /// The same rows restricted to the given feature positions, in that order.
    pub fn select_features(&self, feats: &[usize]) -> Dataset {
        Dataset {
            x: self.x.select_cols(feats),
            y: self.y.clone(),
            features: feats.iter().map(|&j| self.features[j].clone()).collect(),
            target: self.target.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvConfig {
    pub k: usize,
    /// Share of rows held out as the test set, never seen by CV.
    pub test_frac: f64,
    /// Target-quantile bins used to stratify the test split.
    pub n_bins: usize,
    pub seed: u64,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig { k: 5, test_frac: 0.2, n_bins: 10, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub fold_r2: Vec<f64>,
    pub mean: f64,
    /// Population standard deviation of the fold scores.
    pub std: f64,
    pub test_r2: f64,
    pub fold_sizes: Vec<usize>,
    pub test_rows: Vec<usize>,
    pub test_predictions: Vec<f64>,
    pub test_y: Vec<f64>,
}

/// Row layout of a cross-validation run.
#[derive(Debug, Clone, PartialEq)]
pub struct CvPlan {
    pub cv_rows: Vec<usize>,
    pub test_rows: Vec<usize>,
    /// Dataset row indices of each fold.
    pub folds: Vec<Vec<usize>>,
}

impl CvPlan {
    pub fn new(y: &[f64], cfg: &CvConfig) -> Result<CvPlan> {
        if cfg.k < 2 {
            return Err(Error::invalid(format!("k = {} but cross-validation needs k >= 2", cfg.k)));
        }
        let n = y.len();
        if n == 0 {
            return Err(Error::EmptyInput);
        }
        if !(cfg.test_frac > 0.0 && cfg.test_frac < 1.0) || cfg.n_bins == 0 {
            return Err(Error::invalid("test_frac must be in (0, 1) and n_bins positive"));
        }
        let (cv_rows, test_rows, _) =
            stratified_indices(y, cfg.test_frac, cfg.n_bins.min(n), seed::derive(cfg.seed, "test-split"));
        if cv_rows.len() < cfg.k || test_rows.len() < 2 {
            return Err(Error::invalid(format!(
                "{} cross-validation rows and {} test rows are too few for k = {}",
                cv_rows.len(),
                test_rows.len(),
                cfg.k
            )));
        }
        let folds = fold_assignments(cv_rows.len(), cfg.k, seed::derive(cfg.seed, "folds"))?
            .into_iter()
            .map(|f| f.into_iter().map(|p| cv_rows[p]).collect())
            .collect();
        Ok(CvPlan { cv_rows, test_rows, folds })
    }

    /// CV rows outside fold `f`, ascending.
    pub fn train_rows(&self, f: usize) -> Vec<usize> {
        let mut held = self.folds[f].clone();
        held.sort_unstable();
        self.cv_rows.iter().copied().filter(|r| held.binary_search(r).is_err()).collect()
    }
}

/// Seeded shuffle of `0..n` cut into `k` contiguous folds; the first `n % k`
/// folds get one extra row.
pub fn fold_assignments(n: usize, k: usize, seed_v: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 || k > n {
        return Err(Error::invalid(format!("k = {k} must be in 2..={n}")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seed::rng(seed_v));
    let (base, extra) = (n / k, n % k);
    let mut out = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let len = base + usize::from(f < extra);
        out.push(order[start..start + len].to_vec());
        start += len;
    }
    Ok(out)
}

pub(crate) fn mean_std(v: &[f64]) -> (f64, f64) {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64;
    (m, var.sqrt())
}

/// k-fold CV on the non-test rows plus a final fit on all of them scored on
/// the held-out test rows. Returns the report and the final model.
pub fn kfold_cv_fit(data: &Dataset, trainer: &TrainerSpec, cfg: &CvConfig) -> Result<(CvReport, FittedModel)> {
    let plan = CvPlan::new(&data.y, cfg)?;
    let fold_r2 = (0..cfg.k)
        .into_par_iter()
        .map(|f| {
            let (xt, yt) = data.rows(&plan.train_rows(f));
            let (xv, yv) = data.rows(&plan.folds[f]);
            let m = trainer.fit(&xt, &yt, seed::derive_indexed(cfg.seed, "fold", f as u64))?;
            r2_score(&yv, &m.predict_rows(&xv))
        })
        .collect::<Result<Vec<f64>>>()?;
    let (xt, yt) = data.rows(&plan.cv_rows);
    let model = trainer.fit(&xt, &yt, seed::derive(cfg.seed, "final"))?;
    let (xs, ys) = data.rows(&plan.test_rows);
    let test_predictions = model.predict_rows(&xs);
    let test_r2 = r2_score(&ys, &test_predictions)?;
    let (mean, std) = mean_std(&fold_r2);
    Ok((
        CvReport {
            fold_r2,
            mean,
            std,
            test_r2,
            fold_sizes: plan.folds.iter().map(Vec::len).collect(),
            test_rows: plan.test_rows,
            test_predictions,
            test_y: ys,
        },
        model,
    ))
}

pub fn kfold_cv(data: &Dataset, trainer: &TrainerSpec, cfg: &CvConfig) -> Result<CvReport> {
    Ok(kfold_cv_fit(data, trainer, cfg)?.0)
}

/// One row per fold plus a test row, for plotting.
pub fn write_cv_csv(report: &CvReport, path: &std::path::Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["split", "rows", "r2"])?;
    for (f, (r2, n)) in report.fold_r2.iter().zip(&report.fold_sizes).enumerate() {
        w.write_record([format!("fold_{f}"), n.to_string(), r2.to_string()])?;
    }
    w.write_record(["test".to_string(), report.test_rows.len().to_string(), report.test_r2.to_string()])?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::super::model::ModelSpec;
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    pub(crate) fn dataset(n: usize, s: u64) -> Dataset {
        let mut r = seed::rng(s);
        let x = Matrix::from_fn(n, 3, |_, _| r.random_range(0.0..1.0));
        let y = (0..n).map(|i| 4.0 * x.get(i, 0) + x.get(i, 1) + 0.1 * r.random::<f64>()).collect();
        Dataset { x, y, features: vec!["a".into(), "b".into(), "c".into()], target: "y".into() }
    }

    #[test]
    fn fold_sizes_with_remainder() {
        let f = fold_assignments(103, 5, 1).unwrap();
        assert_eq!(f.iter().map(Vec::len).collect::<Vec<_>>(), vec![21, 21, 21, 20, 20]);
        assert!(fold_assignments(10, 1, 1).is_err());
    }

    proptest! {
        #[test]
        fn folds_partition_rows(n in 2usize..200, k in 2usize..10, s in 0u64..50) {
            prop_assume!(k <= n);
            let mut all: Vec<usize> = fold_assignments(n, k, s).unwrap().concat();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        }
    }

    #[test]
    fn report_is_deterministic_and_disjoint() {
        let d = dataset(120, 3);
        let t = TrainerSpec::new(ModelSpec::Tree { depth: 4, min_leaf: 2, l2: 0.0 });
        let cfg = CvConfig { seed: 9, ..CvConfig::default() };
        let a = kfold_cv(&d, &t, &cfg).unwrap();
        assert_eq!(a, kfold_cv(&d, &t, &cfg).unwrap());
        assert_eq!(a.fold_r2.len(), 5);
        // ten bins of 12 rows, round(2.4) test rows each
        assert_eq!(a.test_rows.len(), 20);
        let plan = CvPlan::new(&d.y, &cfg).unwrap();
        let mut all: Vec<usize> = plan.folds.concat();
        all.extend(&plan.test_rows);
        all.sort_unstable();
        assert_eq!(all, (0..120).collect::<Vec<_>>());
        assert!(a.test_r2 > 0.8);
    }

    #[test]
    fn k_below_two_rejected() {
        let d = dataset(30, 1);
        let t = TrainerSpec::new(ModelSpec::Knn { k: 1 });
        assert!(kfold_cv(&d, &t, &CvConfig { k: 1, ..CvConfig::default() }).is_err());
    }
}
