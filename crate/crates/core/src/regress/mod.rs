//! Regression models, metrics, cross-validation and hyperparameter search.

mod binning;
mod cv;
mod forest;
mod gbdt;
mod grid;
mod knn;
mod metrics;
mod model;
mod select;
mod tree;

pub use binning::{bin_features, Binned, EXACT_BINS};
pub use cv::{fold_assignments, kfold_cv, kfold_cv_fit, write_cv_csv, CvConfig, CvPlan, CvReport, Dataset};
pub use forest::{fit_forest, ForestMode, ForestModel, ForestParams};
pub use gbdt::{fit_gbdt, fit_gbdt_binned, EarlyStopper, GbdtModel, GbdtParams};
pub use grid::{grid_search, write_grid_csv, GridCell, GridResult, GridSpec};
pub use knn::{knn_regress, KnnModel};
pub use metrics::{mape, mse, r2_score};
pub use model::{FittedModel, Model, ModelFile, ModelMeta, ModelSpec, Predictor, TrainerSpec, MODEL_SCHEMA_VERSION};
pub use select::{select_model, Selection, ENSEMBLE_NAME, ENSEMBLE_SIZE};
pub use tree::{fit_tree, GrowParams, TreeNode};
