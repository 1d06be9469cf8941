//! Fitted model container, trainer specifications and the model file format.

use serde::{Deserialize, Serialize};

use super::binning::bin_features;
use super::forest::{fit_forest, ForestMode, ForestModel, ForestParams};
use super::gbdt::{fit_gbdt_binned, GbdtModel, GbdtParams};
use super::knn::KnnModel;
use super::tree::{check_xy, fit_tree, TreeNode};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seed;
use crate::table::split::stratified_indices;

pub const MODEL_SCHEMA_VERSION: u32 = 1;

/// Anything that maps a feature row to a prediction.
pub trait Predictor {
    fn predict_row(&self, row: &[f64]) -> f64;

    fn predict_rows(&self, x: &Matrix) -> Vec<f64> {
        (0..x.rows()).map(|i| self.predict_row(x.row(i))).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Model {
    Tree { root: TreeNode },
    Forest(ForestModel),
    Gbdt(GbdtModel),
    Knn(KnnModel),
}

impl Model {
    pub fn name(&self) -> &'static str {
        match self {
            Model::Tree { .. } => "tree",
            Model::Forest(f) if f.mode == ForestMode::RandomForest => "random_forest",
            Model::Forest(_) => "extra_trees",
            Model::Gbdt(_) => "gbdt",
            Model::Knn(_) => "knn",
        }
    }

    /// Trees that take part in prediction; empty for KNN.
    pub fn trees(&self) -> &[TreeNode] {
        match self {
            Model::Tree { root } => std::slice::from_ref(root),
            Model::Forest(f) => &f.trees,
            Model::Gbdt(g) => g.used_trees(),
            Model::Knn(_) => &[],
        }
    }
}

impl Predictor for Model {
    fn predict_row(&self, row: &[f64]) -> f64 {
        match self {
            Model::Tree { root } => root.predict(row),
            Model::Forest(f) => f.predict(row),
            Model::Gbdt(g) => g.predict(row),
            Model::Knn(k) => k.predict(row),
        }
    }

    fn predict_rows(&self, x: &Matrix) -> Vec<f64> {
        match self {
            Model::Knn(k) => k.predict_matrix(x),
            _ => (0..x.rows()).map(|i| self.predict_row(x.row(i))).collect(),
        }
    }
}

/// A model plus the target transform it was trained under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub model: Model,
    /// Trained on `ln(1 + y)`; predictions are mapped back with `exp(p) - 1`.
    pub log_target: bool,
}

impl Predictor for FittedModel {
    fn predict_row(&self, row: &[f64]) -> f64 {
        let p = self.model.predict_row(row);
        if self.log_target { p.exp_m1() } else { p }
    }

    fn predict_rows(&self, x: &Matrix) -> Vec<f64> {
        let p = self.model.predict_rows(x);
        if self.log_target { p.into_iter().map(f64::exp_m1).collect() } else { p }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelSpec {
    Tree {
        depth: usize,
        min_leaf: usize,
        l2: f64,
    },
    RandomForest(ForestParams),
    ExtraTrees(ForestParams),
    Gbdt {
        #[serde(flatten)]
        params: GbdtParams,
        /// Share of the training rows held out for early stopping.
        #[serde(default = "default_val_frac")]
        val_frac: f64,
    },
    Knn {
        k: usize,
    },
}

fn default_val_frac() -> f64 {
    0.2
}

impl ModelSpec {
    pub fn gbdt(params: GbdtParams) -> Self {
        ModelSpec::Gbdt { params, val_frac: default_val_frac() }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::Tree { .. } => "tree",
            ModelSpec::RandomForest(_) => "random_forest",
            ModelSpec::ExtraTrees(_) => "extra_trees",
            ModelSpec::Gbdt { .. } => "gbdt",
            ModelSpec::Knn { .. } => "knn",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainerSpec {
    #[serde(flatten)]
    pub model: ModelSpec,
    #[serde(default)]
    pub log_target: bool,
}

impl TrainerSpec {
    pub fn new(model: ModelSpec) -> Self {
        TrainerSpec { model, log_target: false }
    }

    pub fn fit(&self, x: &Matrix, y: &[f64], seed: u64) -> Result<FittedModel> {
        check_xy(x, y)?;
        let ty: Vec<f64>;
        let y = if self.log_target {
            if let Some(v) = y.iter().find(|&&v| v <= -1.0) {
                return Err(Error::invalid(format!("log target needs y > -1, found {v}")));
            }
            ty = y.iter().map(|v| v.ln_1p()).collect();
            &ty[..]
        } else {
            y
        };
        let model = match &self.model {
            ModelSpec::Tree { depth, min_leaf, l2 } => Model::Tree { root: fit_tree(x, y, *depth, *min_leaf, *l2)? },
            ModelSpec::RandomForest(p) => Model::Forest(fit_forest(x, y, ForestMode::RandomForest, *p, seed)?),
            ModelSpec::ExtraTrees(p) => Model::Forest(fit_forest(x, y, ForestMode::ExtraTrees, *p, seed)?),
            ModelSpec::Gbdt { params, val_frac } => {
                let s = GbdtSplit::new(x, y, *params, *val_frac, seed)?;
                Model::Gbdt(s.fit(*params)?)
            }
            ModelSpec::Knn { k } => Model::Knn(KnnModel::fit(x, y, *k)?),
        };
        Ok(FittedModel { model, log_target: self.log_target })
    }
}

/// Inner train/validation split used by boosting, with the training side
/// binned once so several parameter settings can reuse it.
pub(crate) struct GbdtSplit {
    binned: super::binning::Binned,
    ytrain: Vec<f64>,
    xval: Matrix,
    yval: Vec<f64>,
}

impl GbdtSplit {
    pub(crate) fn new(x: &Matrix, y: &[f64], params: GbdtParams, val_frac: f64, seed_v: u64) -> Result<Self> {
        let (train, val) = if params.od_wait > 0 {
            if !(val_frac > 0.0 && val_frac < 1.0) {
                return Err(Error::invalid(format!("val_frac {val_frac} outside (0, 1)")));
            }
            let (tr, va, _) = stratified_indices(y, val_frac, y.len().min(10), seed::derive(seed_v, "gbdt-validation"));
            if tr.is_empty() {
                return Err(Error::invalid("too few rows for a validation split"));
            }
            (tr, va)
        } else {
            ((0..y.len()).collect(), Vec::new())
        };
        let xtrain = x.select_rows(&train);
        Ok(GbdtSplit {
            binned: bin_features(&xtrain, params.max_bins),
            ytrain: train.iter().map(|&i| y[i]).collect(),
            xval: x.select_rows(&val),
            yval: val.iter().map(|&i| y[i]).collect(),
        })
    }

    pub(crate) fn fit(&self, params: GbdtParams) -> Result<GbdtModel> {
        fit_gbdt_binned(&self.binned, &self.ytrain, &self.xval, &self.yval, params)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub target: String,
    pub features: Vec<String>,
    pub test_frac: f64,
    pub n_bins: usize,
    pub seed: u64,
    pub trainer: TrainerSpec,
}

/// On-disk JSON form of a trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub schema_version: u32,
    pub meta: ModelMeta,
    pub fitted: FittedModel,
}

impl ModelFile {
    pub fn new(meta: ModelMeta, fitted: FittedModel) -> Self {
        ModelFile { schema_version: MODEL_SCHEMA_VERSION, meta, fitted }
    }

    pub fn write(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn read(path: &std::path::Path) -> Result<Self> {
        let f: ModelFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if f.schema_version != MODEL_SCHEMA_VERSION {
            return Err(Error::Schema(format!(
                "model schema version {} (expected {MODEL_SCHEMA_VERSION})",
                f.schema_version
            )));
        }
        Ok(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn data(n: usize) -> (Matrix, Vec<f64>) {
        let mut r = seed::rng(11);
        let x = Matrix::from_fn(n, 3, |_, _| r.random_range(0.0..2.0));
        let y = (0..n).map(|i| 1.0 + x.get(i, 0) * x.get(i, 1)).collect();
        (x, y)
    }

    #[test]
    fn every_spec_round_trips_through_json() {
        let (x, y) = data(60);
        let specs = [
            ModelSpec::Tree { depth: 3, min_leaf: 2, l2: 0.0 },
            ModelSpec::RandomForest(ForestParams { n_trees: 5, ..ForestParams::default() }),
            ModelSpec::ExtraTrees(ForestParams { n_trees: 5, bootstrap: false, ..ForestParams::default() }),
            ModelSpec::gbdt(GbdtParams { n_rounds: 30, learning_rate: 0.2, ..GbdtParams::default() }),
            ModelSpec::Knn { k: 3 },
        ];
        for spec in specs {
            let trainer = TrainerSpec::new(spec);
            let fitted = trainer.fit(&x, &y, 4).unwrap();
            let meta = ModelMeta {
                target: "y".into(),
                features: vec!["a".into(), "b".into(), "c".into()],
                test_frac: 0.2,
                n_bins: 10,
                seed: 4,
                trainer: trainer.clone(),
            };
            let file = ModelFile::new(meta, fitted.clone());
            let back: ModelFile = serde_json::from_str(&serde_json::to_string(&file).unwrap()).unwrap();
            assert_eq!(back.fitted.predict_rows(&x), fitted.predict_rows(&x));
            assert_eq!(back.meta.trainer, trainer);
        }
    }

    #[test]
    fn log_target_maps_back() {
        let (x, y) = data(40);
        let t = TrainerSpec { model: ModelSpec::Knn { k: 1 }, log_target: true };
        let f = t.fit(&x, &y, 0).unwrap();
        for (p, v) in f.predict_rows(&x).iter().zip(&y) {
            assert!((p - v).abs() < 1e-9);
        }
        assert!(t.fit(&x, &vec![-2.0; 40], 0).is_err());
    }
}
