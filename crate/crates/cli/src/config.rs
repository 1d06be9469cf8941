//! Run configuration: one JSON file with a section per stage.

use std::path::Path;

use anyhow::Context;
use serde::{Deserialize, Serialize};

use fracflow_core::analysis::AnalysisConfig;
use fracflow_core::ingest::EncodingPolicy;
use fracflow_core::regress::{GbdtParams, GridSpec, ModelSpec, TrainerSpec};
use fracflow_core::structure::{TsneParams, DEFAULT_MIN_PTS};
use fracflow_core::synthgen::SynthConfig;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Root seed; every stage seed is derived from it.
    pub seed: u64,
    pub synth: SynthConfig,
    pub ingest: IngestConfig,
    pub impute: ImputeConfig,
    pub cluster: ClusterConfig,
    pub train: TrainConfig,
    pub analyze: AnalysisConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 7,
            synth: SynthConfig::default(),
            ingest: IngestConfig::default(),
            impute: ImputeConfig::default(),
            cluster: ClusterConfig::default(),
            train: TrainConfig::default(),
            analyze: AnalysisConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestConfig {
    pub encoding: EncodingPolicy,
    pub target: String,
}

impl Default for IngestConfig {
    fn default() -> Self {
        IngestConfig { encoding: EncodingPolicy::Reduced, target: "oil_cum_3m".into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Method {
    Drop,
    Mean,
    PadMean,
    ClusterMean,
    Nnmf,
    Tsvd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImputeConfig {
    pub method: Method,
    /// Low-rank methods pick a rank from the data when unset.
    pub rank: Option<usize>,
    pub max_iters: usize,
    pub tol: f64,
    /// Row missing-fraction threshold used by `drop`.
    pub drop_threshold: f64,
}

impl Default for ImputeConfig {
    fn default() -> Self {
        ImputeConfig { method: Method::Tsvd, rank: None, max_iters: 200, tol: 1e-6, drop_threshold: 0.65 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterConfig {
    pub min_pts: usize,
    /// Picked by the nearest-neighbour heuristic when unset.
    pub eps: Option<f64>,
    pub iforest_trees: usize,
    pub iforest_subsample: usize,
    pub tsne: TsneParams,
    /// Rows beyond this count are left out of the embedding.
    pub tsne_max_rows: usize,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        ClusterConfig {
            min_pts: DEFAULT_MIN_PTS,
            eps: None,
            iforest_trees: 100,
            iforest_subsample: 256,
            tsne: TsneParams::default(),
            tsne_max_rows: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub target: String,
    pub trainer: TrainerSpec,
    pub k: usize,
    pub test_frac: f64,
    pub n_bins: usize,
    /// Depth x L2 grid searched before the final fit; none trains as given.
    pub grid: Option<GridSpec>,
    /// Also report the score of the same setup trained on `ln(1 + y)`.
    pub log_target_report: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            target: "oil_cum_3m".into(),
            trainer: TrainerSpec::new(ModelSpec::gbdt(GbdtParams {
                learning_rate: 0.1,
                max_bins: 63,
                ..GbdtParams::default()
            })),
            k: 5,
            test_frac: 0.2,
            n_bins: 10,
            grid: None,
            log_target_report: false,
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<RunConfig, CliError> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))
            .map_err(CliError::Usage)?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(anyhow::anyhow!("config {}: {e}", path.display())))?;
        cfg.synth.validate().map_err(|e| CliError::Usage(anyhow::anyhow!("config {}: {e}", path.display())))?;
        Ok(cfg)
    }
}
