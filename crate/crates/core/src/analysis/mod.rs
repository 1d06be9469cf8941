//! Post-model analysis: gain importance, RFE curve, OVAT tornado and a
//! bootstrap interval for the test R².

mod bootstrap;
mod importance;
mod ovat;
mod rfe;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use bootstrap::{bootstrap_r2_ci, draw_size, histogram, BootstrapCi, BootstrapConfig};
pub use importance::{gain_importance, Importance};
pub use ovat::{column_means, design_features, ovat_tornado, TornadoEntry, OVAT_DELTA};
pub use rfe::{rfe_curve, rfe_grid, RfeCurve, RfePoint, RFE_TOLERANCE};

use crate::error::{Error, Result};
use crate::regress::{CvConfig, Dataset, ModelFile};
use crate::table::{FieldTable, SCHEMA_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisConfig {
    pub delta: f64,
    /// Run OVAT over every feature instead of the design group only.
    pub all_features: bool,
    pub rfe_step: usize,
    pub rfe_tolerance: f64,
    pub bootstrap: BootstrapConfig,
    pub hist_bins: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            delta: OVAT_DELTA,
            all_features: false,
            rfe_step: 5,
            rfe_tolerance: RFE_TOLERANCE,
            bootstrap: BootstrapConfig::default(),
            hist_bins: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub schema_version: u32,
    pub importance: Vec<Importance>,
    pub rfe: RfeCurve,
    pub tornado: Vec<TornadoEntry>,
    pub bootstrap: BootstrapCi,
}

/// All four analyses for a trained model on the table it was trained on.
/// RFE and the bootstrap refit with the model's own trainer, split settings
/// and seed; the bootstrap seed in `cfg` is replaced by the model seed.
pub fn analyze(file: &ModelFile, table: &FieldTable, cfg: &AnalysisConfig) -> Result<AnalysisReport> {
    let meta = &file.meta;
    let cols = meta
        .features
        .iter()
        .map(|f| table.column_index(f))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| Error::Schema(format!("table does not match the model features: {e}")))?;
    let data = Dataset::with_columns(table, &cols, &meta.target)?;
    let importance = gain_importance(&file.fitted.model, &data.features)?;
    let order: Vec<usize> = importance.iter().map(|i| i.index).collect();
    let cv = CvConfig { test_frac: meta.test_frac, n_bins: meta.n_bins, seed: meta.seed, ..CvConfig::default() };
    let rfe = rfe_curve(&data, &order, &rfe_grid(order.len(), cfg.rfe_step), &meta.trainer, &cv, cfg.rfe_tolerance)?;
    let which: Vec<usize> =
        if cfg.all_features { (0..data.features.len()).collect() } else { design_features(table, &data.features)? };
    let tornado = ovat_tornado(&file.fitted, &data.x, &data.features, &which, cfg.delta)?;
    let bcfg = BootstrapConfig { seed: meta.seed, test_frac: meta.test_frac, n_bins: meta.n_bins, ..cfg.bootstrap };
    let bootstrap = bootstrap_r2_ci(&data, &meta.trainer, &bcfg)?;
    Ok(AnalysisReport { schema_version: SCHEMA_VERSION, importance, rfe, tornado, bootstrap })
}

/// File names written by [`write_report`].
pub const REPORT_FILES: [&str; 6] =
    ["analysis.json", "importance.csv", "rfe.csv", "tornado.csv", "bootstrap_samples.csv", "bootstrap_hist.csv"];

pub fn write_report(report: &AnalysisReport, dir: &Path, hist_bins: usize) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(REPORT_FILES[0]), serde_json::to_string_pretty(report)?)?;

    let mut w = csv::Writer::from_path(dir.join(REPORT_FILES[1]))?;
    w.write_record(["feature", "importance"])?;
    for i in &report.importance {
        w.write_record([i.feature.clone(), i.importance.to_string()])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join(REPORT_FILES[2]))?;
    w.write_record(["n_features", "test_r2", "selected"])?;
    for p in &report.rfe.points {
        w.write_record([p.n_features.to_string(), p.test_r2.to_string(), (p.n_features == report.rfe.selected).to_string()])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join(REPORT_FILES[3]))?;
    w.write_record(["feature", "baseline", "low", "high", "low_delta", "high_delta", "delta"])?;
    for e in &report.tornado {
        w.write_record([
            e.feature.clone(),
            e.baseline.to_string(),
            e.low.to_string(),
            e.high.to_string(),
            (e.low - e.baseline).to_string(),
            (e.high - e.baseline).to_string(),
            e.delta.to_string(),
        ])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join(REPORT_FILES[4]))?;
    w.write_record(["iteration", "test_r2"])?;
    for (i, s) in report.bootstrap.samples.iter().enumerate() {
        w.write_record([i.to_string(), s.to_string()])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join(REPORT_FILES[5]))?;
    w.write_record(["bin_low", "bin_high", "count"])?;
    for (lo, hi, c) in histogram(&report.bootstrap.samples, hist_bins) {
        w.write_record([lo.to_string(), hi.to_string(), c.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
