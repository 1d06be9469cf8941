//! Structure discovery: density clustering, anomaly screening, embedding.

mod dbscan;
mod iforest;
mod tsne;

pub use dbscan::{dbscan, default_eps, ClusterLabels, DEFAULT_MIN_PTS, NOISE};
pub use iforest::{average_path_length, harmonic, isolation_forest_scores, kurtosis, AnomalyScores};
pub use tsne::{calibrate_affinities, tsne_embed, TsneParams, EXAGGERATION, EXAGGERATION_ITERS};
