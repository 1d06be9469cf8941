//! Synthetic field database with planted structure and a corruption ledger.
//!
//! Feature values are `loc + scale * raw` where `raw` is a nonnegative
//! rank-k product `Z * L`, plus a per-cluster offset and Gaussian noise. The
//! target is a fixed function of ten named features (see [`planted_target`]).

mod config;
mod export;
mod oracle;

use std::collections::BTreeSet;

use rand::Rng;
use rand_distr::{Beta, Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{CategoryDictionary, DictionarySet, SourceKind, TARGET_COLUMN};
use crate::matrix::Matrix;
use crate::seed;
use crate::table::{Column, ColumnGroup, ColumnMeta, FieldTable, RowKey};

pub use config::SynthConfig;
pub use export::export_sources;
pub use oracle::{best_rank_k_error, brute_force_dbscan};

pub const PROPPANT_COLUMN: &str = "proppant";
pub const GROUND_TRUTH_SCHEMA_VERSION: u32 = 1;
/// Edit distance reachable by the bundled proppant dictionary.
pub const DICTIONARY_DISTANCE: usize = 1;

const MANUFACTURERS: [&str; 5] = ["carbo", "borovichi", "fores", "santrol", "hexion"];
const MESHES: [&str; 3] = ["12/18", "16/30", "20/40"];

/// Canonical proppant names: every manufacturer with every mesh size.
pub fn proppant_vocabulary() -> Vec<String> {
    MANUFACTURERS
        .iter()
        .flat_map(|m| MESHES.iter().map(move |s| format!("{m} {s}")))
        .collect()
}

pub fn proppant_dictionaries() -> Result<DictionarySet> {
    let mut d = DictionarySet::new();
    d.insert(
        PROPPANT_COLUMN.to_string(),
        CategoryDictionary::new(proppant_vocabulary(), DICTIONARY_DISTANCE)?,
    );
    Ok(d)
}

/// A named numeric feature: physical value = `loc + scale * raw`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSpec {
    pub name: String,
    pub group: ColumnGroup,
    pub source: SourceKind,
    pub loc: f64,
    pub scale: f64,
}

/// The ten features the target depends on, in column order.
pub const PLANTED_FEATURES: [&str; 10] = [
    "net_pay",
    "permeability",
    "pad_share",
    "perf_tvd",
    "proppant_mass",
    "n_stages",
    "fluid_volume",
    "formation_pressure",
    "frac_length",
    "skin",
];

const PLANTED_SPECS: [(ColumnGroup, SourceKind, f64, f64); 10] = [
    (ColumnGroup::Formation, SourceKind::Geomechanics, 2.0, 6.0),
    (ColumnGroup::Formation, SourceKind::Geomechanics, 1.0, 15.0),
    (ColumnGroup::Design, SourceKind::FracList, 0.05, 0.08),
    (ColumnGroup::Well, SourceKind::LayerIntersection, 1800.0, 300.0),
    (ColumnGroup::Design, SourceKind::FracList, 20.0, 40.0),
    (ColumnGroup::Design, SourceKind::FracList, 0.0, 1.0),
    (ColumnGroup::Design, SourceKind::FracList, 100.0, 120.0),
    (ColumnGroup::Formation, SourceKind::Geomechanics, 150.0, 40.0),
    (ColumnGroup::Design, SourceKind::FracList, 40.0, 60.0),
    (ColumnGroup::Well, SourceKind::OperatingPractice, -6.0, 3.0),
];

/// Column catalog for `n_numeric` features: the planted ten first, then
/// filler columns cycling through design, formation and well groups.
pub fn feature_catalog(n_numeric: usize) -> Vec<FeatureSpec> {
    let mut out: Vec<FeatureSpec> = PLANTED_FEATURES
        .iter()
        .zip(PLANTED_SPECS)
        .map(|(n, (group, source, loc, scale))| FeatureSpec { name: n.to_string(), group, source, loc, scale })
        .collect();
    for j in 0..n_numeric.saturating_sub(out.len()) {
        let (prefix, group, source) = match j % 3 {
            0 => ("design", ColumnGroup::Design, SourceKind::FracList),
            1 => ("formation", ColumnGroup::Formation, SourceKind::Geomechanics),
            _ => ("well", ColumnGroup::Well, SourceKind::OperatingPractice),
        };
        out.push(FeatureSpec {
            name: format!("{prefix}_param_{:02}", j / 3 + 1),
            group,
            source,
            loc: 5.0 + 10.0 * (j % 4) as f64,
            scale: 1.0 + (j % 5) as f64,
        });
    }
    out
}

fn stages_from_raw(raw: f64) -> f64 {
    (1.0 + (raw * 3.0).round()).clamp(1.0, 12.0)
}

/// Noiseless target from the ten planted features in physical units, in
/// [`PLANTED_FEATURES`] order. With `z = (x - loc) / scale`:
///
/// ```text
/// t = z_net_pay + 0.8 z_permeability - 1.5 z_pad_share + 0.4 z_perf_tvd
///   + 0.25 z_proppant_mass * n_stages + 0.6 z_fluid_volume * z_formation_pressure
///   + 1.5 (1 - exp(-1.5 z_frac_length)) + 0.8 [skin < 0]
/// oil = 250 (t + 3)
/// ```
pub fn planted_target(x: &[f64]) -> f64 {
    let z = |i: usize| (x[i] - PLANTED_SPECS[i].2) / PLANTED_SPECS[i].3;
    let t = z(0) + 0.8 * z(1) - 1.5 * z(2) + 0.4 * z(3)
        + 0.25 * z(4) * x[5]
        + 0.6 * z(6) * z(7)
        + 1.5 * (1.0 - (-1.5 * z(8)).exp())
        + if x[9] < 0.0 { 0.8 } else { 0.0 };
    250.0 * (t + 3.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorruptionKind {
    Missing,
    Typo,
    Outlier,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CellValue {
    Number(f64),
    Text(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corruption {
    pub row: usize,
    pub column: String,
    pub kind: CorruptionKind,
    pub original: CellValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub schema_version: u32,
    pub config: SynthConfig,
    /// Row-major `n_wells x latent_rank` factors.
    pub latent: Matrix,
    /// Row-major `latent_rank x n_numeric` loadings.
    pub loadings: Matrix,
    pub cluster: Vec<usize>,
    pub true_target: Vec<f64>,
    /// In the order applied; replay in reverse to undo.
    pub ledger: Vec<Corruption>,
}

impl GroundTruth {
    pub fn write(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }

    pub fn read(path: &std::path::Path) -> Result<GroundTruth> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

pub fn true_target(gt: &GroundTruth, row: usize) -> Result<f64> {
    gt.true_target
        .get(row)
        .copied()
        .ok_or_else(|| Error::invalid(format!("row {row} out of range (n = {})", gt.true_target.len())))
}

/// Undo the ledger, newest entry first, recovering the clean table.
pub fn replay_ledger(table: &FieldTable, gt: &GroundTruth) -> Result<FieldTable> {
    let (keys, mut cols) = table.clone().into_parts();
    for c in gt.ledger.iter().rev() {
        let j = cols
            .iter()
            .position(|col| col.name() == c.column)
            .ok_or_else(|| Error::UnknownColumn(c.column.clone()))?;
        if c.row >= keys.len() {
            return Err(Error::invalid(format!("ledger row {} out of range", c.row)));
        }
        match &c.original {
            CellValue::Number(v) => cols[j].set_num(c.row, Some(*v)),
            CellValue::Text(s) => cols[j].set_cat(c.row, Some(s.clone())),
        }
    }
    FieldTable::new(keys, cols)
}

/// Number of cells left empty for this configuration.
pub fn missing_cell_target(cfg: &SynthConfig) -> usize {
    (cfg.missing_fraction * (cfg.n_wells * corruptible_columns(cfg.n_numeric).len()) as f64).round() as usize
}

/// Numeric columns that may be emptied or shifted; the stage count is kept
/// intact because the raw frac list encodes it as the number of rows.
pub fn corruptible_columns(n_numeric: usize) -> Vec<usize> {
    feature_catalog(n_numeric)
        .iter()
        .enumerate()
        .filter(|(_, f)| f.name != "n_stages")
        .map(|(j, _)| j)
        .collect()
}

const FIRST_DAY: i64 = 16071; // 2014-01-01
const DAY_SPAN: i64 = 6 * 365;

/// Generate the table and its ground truth. `seed` overrides `config.seed`.
pub fn generate_synth_db(config: &SynthConfig, seed_v: u64) -> Result<(FieldTable, GroundTruth)> {
    config.validate()?;
    let cfg = SynthConfig { seed: seed_v, ..config.clone() };
    let (n, m, k) = (cfg.n_wells, cfg.n_numeric, cfg.latent_rank);
    let catalog = feature_catalog(m);

    let mut rng = seed::rng(seed::derive(seed_v, "synth-keys"));
    let fields: Vec<usize> = (0..n).map(|i| i % cfg.n_fields).collect();
    let cluster: Vec<usize> = fields.iter().map(|f| f % cfg.n_clusters).collect();
    let keys: Vec<RowKey> = (0..n)
        .map(|i| {
            let layer = rng.random_range(0..3usize);
            let day = FIRST_DAY + rng.random_range(0..DAY_SPAN);
            RowKey::new(format!("F{:02}", fields[i] + 1), format!("W{:05}", i + 1), format!("L{}", layer + 1), day)
        })
        .collect();

    let mut rng = seed::rng(seed::derive(seed_v, "synth-latent"));
    let latent = Matrix::from_fn(n, k, |_, _| rng.random::<f64>());
    let mut rng = seed::rng(seed::derive(seed_v, "synth-loadings"));
    let loadings = Matrix::from_fn(k, m, |_, _| rng.random::<f64>());
    let mut rng = seed::rng(seed::derive(seed_v, "synth-offsets"));
    let offsets = Matrix::from_fn(cfg.n_clusters, m, |_, _| rng.random::<f64>() * cfg.cluster_separation);
    let mut rng = seed::rng(seed::derive(seed_v, "synth-feature-noise"));
    let noise = Normal::new(0.0, cfg.feature_noise.max(f64::MIN_POSITIVE)).expect("finite std");
    let zl = latent.matmul(&loadings);
    let mut values = Matrix::zeros(n, m);
    for i in 0..n {
        for (j, spec) in catalog.iter().enumerate() {
            let eps = if cfg.feature_noise > 0.0 { noise.sample(&mut rng) } else { 0.0 };
            let raw = zl.get(i, j) + offsets.get(cluster[i], j) + eps;
            let v = if spec.name == "n_stages" { stages_from_raw(raw) } else { spec.loc + spec.scale * raw };
            values.set(i, j, v);
        }
    }

    let true_target: Vec<f64> = (0..n).map(|i| planted_target(&values.row(i)[..10])).collect();
    let mean = true_target.iter().sum::<f64>() / n as f64;
    let sd = (true_target.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    let mut rng = seed::rng(seed::derive(seed_v, "synth-target-noise"));
    let target: Vec<f64> = if cfg.noise_std > 0.0 && sd > 0.0 {
        let d = Normal::new(0.0, cfg.noise_std * sd).expect("finite std");
        true_target.iter().map(|t| t + d.sample(&mut rng)).collect()
    } else {
        true_target.clone()
    };

    let vocab = proppant_vocabulary();
    let mut rng = seed::rng(seed::derive(seed_v, "synth-proppant"));
    let mut proppant: Vec<String> = (0..n).map(|_| vocab[rng.random_range(0..vocab.len())].clone()).collect();

    let mut ledger = Vec::new();
    let corruptible = corruptible_columns(m);
    inject_outliers(&cfg, &mut values, &corruptible, &catalog, &mut ledger);
    inject_typos(&cfg, &mut proppant, &mut ledger);
    let missing = inject_missing(&cfg, &values, &corruptible, &catalog, &mut ledger);

    let mut columns: Vec<Column> = catalog
        .iter()
        .enumerate()
        .map(|(j, spec)| {
            let vals = (0..n).map(|i| (!missing.contains(&(i, j))).then(|| values.get(i, j))).collect();
            Column::from_numeric(ColumnMeta::numeric(spec.name.clone(), spec.group), vals)
        })
        .collect();
    columns.push(Column::from_categorical(
        ColumnMeta::categorical(PROPPANT_COLUMN, ColumnGroup::Design),
        proppant.into_iter().map(Some).collect(),
    ));
    columns.push(Column::dense(ColumnMeta::numeric(TARGET_COLUMN, ColumnGroup::Production).as_target(), target));
    let table = FieldTable::new(keys, columns)?;
    let gt = GroundTruth {
        schema_version: GROUND_TRUTH_SCHEMA_VERSION,
        config: cfg,
        latent,
        loadings,
        cluster,
        true_target,
        ledger,
    };
    Ok((table, gt))
}

fn column_sd(values: &Matrix, j: usize) -> f64 {
    let c = values.column(j);
    let mean = c.iter().sum::<f64>() / c.len() as f64;
    (c.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / c.len() as f64).sqrt()
}

/// Shift three corruptible cells of each outlier row by ten column standard
/// deviations.
fn inject_outliers(cfg: &SynthConfig, values: &mut Matrix, cols: &[usize], catalog: &[FeatureSpec], ledger: &mut Vec<Corruption>) {
    let n = values.rows();
    let count = (cfg.outlier_rate * n as f64).round() as usize;
    if count == 0 {
        return;
    }
    let sds: Vec<f64> = (0..values.cols()).map(|j| column_sd(values, j)).collect();
    let mut rng = seed::rng(seed::derive(cfg.seed, "synth-outliers"));
    let mut rows = rand::seq::index::sample(&mut rng, n, count).into_vec();
    rows.sort_unstable();
    for i in rows {
        let mut picked = rand::seq::index::sample(&mut rng, cols.len(), 3.min(cols.len())).into_vec();
        picked.sort_unstable();
        for p in picked {
            let j = cols[p];
            let original = values.get(i, j);
            values.set(i, j, original + 10.0 * sds[j]);
            ledger.push(Corruption {
                row: i,
                column: catalog[j].name.clone(),
                kind: CorruptionKind::Outlier,
                original: CellValue::Number(original),
            });
        }
    }
}

const TYPO_ALPHABET: &[u8] = b"abcdefghijklmnopqrstuvwxyz";

/// One or two random insertions, deletions or substitutions.
fn misspell(token: &str, rng: &mut seed::Rng) -> String {
    let mut chars: Vec<char> = token.chars().collect();
    let edits = rng.random_range(1..=2);
    for _ in 0..edits {
        let letter = TYPO_ALPHABET[rng.random_range(0..TYPO_ALPHABET.len())] as char;
        match rng.random_range(0..3) {
            0 => chars.insert(rng.random_range(0..=chars.len()), letter),
            1 if chars.len() > 1 => {
                chars.remove(rng.random_range(0..chars.len()));
            }
            _ => {
                let p = rng.random_range(0..chars.len());
                chars[p] = letter;
            }
        }
    }
    chars.into_iter().collect()
}

fn inject_typos(cfg: &SynthConfig, proppant: &mut [String], ledger: &mut Vec<Corruption>) {
    let count = (cfg.typo_rate * proppant.len() as f64).round() as usize;
    if count == 0 {
        return;
    }
    let mut rng = seed::rng(seed::derive(cfg.seed, "synth-typos"));
    let mut rows = rand::seq::index::sample(&mut rng, proppant.len(), count).into_vec();
    rows.sort_unstable();
    for i in rows {
        let original = proppant[i].clone();
        proppant[i] = misspell(&original, &mut rng);
        ledger.push(Corruption {
            row: i,
            column: PROPPANT_COLUMN.to_string(),
            kind: CorruptionKind::Typo,
            original: CellValue::Text(original),
        });
    }
}

/// Exactly `round(fraction * cells)` missing cells, drawn by weighted
/// sampling without replacement (Efraimidis-Spirakis keys `u^(1/w)`) with
/// per-column weights from a skewed Beta distribution.
fn inject_missing(
    cfg: &SynthConfig,
    values: &Matrix,
    cols: &[usize],
    catalog: &[FeatureSpec],
    ledger: &mut Vec<Corruption>,
) -> BTreeSet<(usize, usize)> {
    let target = missing_cell_target(cfg);
    let mut out = BTreeSet::new();
    if target == 0 {
        return out;
    }
    let n = values.rows();
    let mut rng = seed::rng(seed::derive(cfg.seed, "synth-missing"));
    let beta = Beta::<f64>::new(0.8, 2.4).expect("valid shape");
    let weights: Vec<f64> = cols.iter().map(|_| beta.sample(&mut rng).max(1e-3)).collect();
    let mut keyed: Vec<(f64, usize, usize)> = Vec::with_capacity(n * cols.len());
    for i in 0..n {
        for (p, &j) in cols.iter().enumerate() {
            let u: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
            keyed.push((u.ln() / weights[p], i, j));
        }
    }
    // largest keys win; ln(u)/w orders like u^(1/w)
    keyed.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut chosen: Vec<(usize, usize)> = keyed[..target].iter().map(|&(_, i, j)| (i, j)).collect();
    chosen.sort_unstable();
    for (i, j) in chosen {
        ledger.push(Corruption {
            row: i,
            column: catalog[j].name.clone(),
            kind: CorruptionKind::Missing,
            original: CellValue::Number(values.get(i, j)),
        });
        out.insert((i, j));
    }
    out
}

/// Numeric input features standardized per column (population std).
pub fn standardized_features(table: &FieldTable) -> Result<Matrix> {
    let cols = table.feature_indices();
    let x = table.numeric_matrix(&cols)?;
    let (n, m) = (x.rows(), x.cols());
    let mut out = x.clone();
    for j in 0..m {
        let c = x.column(j);
        let mean = c.iter().sum::<f64>() / n as f64;
        let sd = (c.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
        let sd = if sd > 0.0 { sd } else { 1.0 };
        for i in 0..n {
            out.set(i, j, (x.get(i, j) - mean) / sd);
        }
    }
    Ok(out)
}
