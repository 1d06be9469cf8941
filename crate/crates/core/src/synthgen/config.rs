use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of the synthetic field database.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_wells: usize,
    pub n_fields: usize,
    pub n_numeric: usize,
    pub latent_rank: usize,
    pub n_clusters: usize,
    /// Share of corruptible numeric cells left empty.
    pub missing_fraction: f64,
    /// Share of proppant cells with a misspelling.
    pub typo_rate: f64,
    /// Share of rows with shifted feature values.
    pub outlier_rate: f64,
    /// Target noise standard deviation relative to the noiseless target's.
    pub noise_std: f64,
    /// Feature noise standard deviation in latent units.
    pub feature_noise: f64,
    /// Scale of the per-cluster feature offsets in latent units.
    pub cluster_separation: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_wells: 5000,
            n_fields: 23,
            n_numeric: 50,
            latent_rank: 5,
            n_clusters: 3,
            missing_fraction: 0.2,
            typo_rate: 0.05,
            outlier_rate: 0.01,
            noise_std: 0.3,
            feature_noise: 0.05,
            cluster_separation: 2.0,
            seed: 7,
        }
    }
}

impl SynthConfig {
    /// Same structure with every corruption and all target noise removed.
    pub fn noiseless(&self) -> SynthConfig {
        SynthConfig {
            missing_fraction: 0.0,
            typo_rate: 0.0,
            outlier_rate: 0.0,
            noise_std: 0.0,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("missing_fraction", self.missing_fraction),
            ("typo_rate", self.typo_rate),
            ("outlier_rate", self.outlier_rate),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(format!("{name} = {v} is outside [0, 1]")));
            }
        }
        for (name, v) in [
            ("noise_std", self.noise_std),
            ("feature_noise", self.feature_noise),
            ("cluster_separation", self.cluster_separation),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} = {v} must be finite and nonnegative")));
            }
        }
        let min_numeric = super::PLANTED_FEATURES.len();
        if self.n_numeric < min_numeric {
            return Err(Error::invalid(format!("n_numeric = {} must be at least {min_numeric}", self.n_numeric)));
        }
        if self.latent_rank == 0 || self.latent_rank > self.n_numeric {
            return Err(Error::invalid(format!(
                "latent_rank = {} must be in 1..={}",
                self.latent_rank, self.n_numeric
            )));
        }
        if self.n_fields == 0 || self.n_fields > self.n_wells {
            return Err(Error::invalid(format!("n_fields = {} must be in 1..=n_wells", self.n_fields)));
        }
        if self.n_clusters == 0 || self.n_clusters > self.n_fields {
            return Err(Error::invalid(format!("n_clusters = {} must be in 1..=n_fields", self.n_clusters)));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<SynthConfig> {
        let c: SynthConfig = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }
}
