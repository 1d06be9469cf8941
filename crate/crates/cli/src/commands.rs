//! Subcommand bodies. Each stage writes into its own directory; the
//! manifest is written once per invocation.

use std::path::{Path, PathBuf};

use anyhow::Context;
use log::info;
use serde::Serialize;

use fracflow_core::analysis::{self, write_report, AnalysisConfig};
use fracflow_core::impute::{
    drop_sparse_rows, fill_column_means, fill_group_means, nnmf_impute, select_rank, split_signed_column, tsvd_impute,
    write_completed, CompletedTable, NnmfParams,
};
use fracflow_core::ingest::{
    dictionaries_to_json, encode_categories, format_date, load_dictionaries, merge_sources_logged, read_source_dir,
    DictionarySet, MergeLog, SourceKind,
};
use fracflow_core::regress::{
    grid_search, kfold_cv, kfold_cv_fit, write_cv_csv, write_grid_csv, CvConfig, Dataset, GridSpec, ModelFile,
    ModelMeta, ModelSpec, TrainerSpec,
};
use fracflow_core::seed;
use fracflow_core::structure::{dbscan, default_eps, isolation_forest_scores, kurtosis, tsne_embed, TsneParams, NOISE};
use fracflow_core::synthgen::{export_sources, generate_synth_db, proppant_dictionaries};
use fracflow_core::table::{read_csv, write_csv, SCHEMA_VERSION};
use fracflow_core::{ColumnGroup, FieldTable, Matrix};

use crate::config::{Method, RunConfig};
use crate::manifest::ManifestBuilder;
use crate::{usage, AnalyzeArgs, CliError, CliResult, ImputeArgs, IngestArgs, OutArgs, TableArgs, TrainArgs};

pub const TABLE_FILE: &str = "table.csv";
pub const COMPLETED_FILE: &str = "completed.csv";
pub const CLUSTERS_FILE: &str = "clusters.csv";
pub const MODEL_FILE: &str = "model.json";

fn prepare_out(dir: &Path) -> CliResult<()> {
    if dir.is_file() {
        return Err(usage!("--out {} is a file, expected a directory", dir.display()));
    }
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(())
}

fn require_file(path: &Path, what: &str) -> CliResult<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(usage!("{what} {} not found", path.display()))
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Internal(e.into()))?;
    std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn read_table(path: &Path) -> CliResult<FieldTable> {
    require_file(path, "input table")?;
    Ok(read_csv(path)?)
}

// ---- synth

struct SynthOut {
    sources: PathBuf,
    dicts: PathBuf,
}

fn run_synth(cfg: &RunConfig, out: &Path, mb: &mut ManifestBuilder) -> CliResult<SynthOut> {
    prepare_out(out)?;
    mb.seed("synth", cfg.seed);
    let (table, gt) = mb.timed("synth", || generate_synth_db(&cfg.synth, cfg.seed))?;
    let sources = out.join("sources");
    let dicts = out.join("dictionaries");
    prepare_out(&sources)?;
    prepare_out(&dicts)?;
    for doc in export_sources(&table)? {
        doc.write_csv(&sources.join(doc.kind.file_name()))?;
    }
    std::fs::write(dicts.join("proppant.json"), dictionaries_to_json(&proppant_dictionaries()?)? + "\n")?;
    write_csv(&table, &out.join("synth.csv"))?;
    gt.write(&out.join("ground_truth.json"))?;
    info!("synth: {} wells, {} ledger entries", table.n_rows(), gt.ledger.len());
    Ok(SynthOut { sources, dicts })
}

pub fn synth(cfg: &RunConfig, a: &OutArgs) -> CliResult<()> {
    let mut mb = ManifestBuilder::new("synth", cfg);
    run_synth(cfg, &a.out, &mut mb)?;
    mb.finish(&a.out)?;
    Ok(())
}

// ---- ingest

#[derive(Serialize)]
struct IngestLog {
    schema_version: u32,
    merge: MergeLog,
    rows_without_target: usize,
    dropped_columns: Vec<String>,
    rows: usize,
    columns: usize,
}

fn run_ingest(
    cfg: &RunConfig,
    sources: &Path,
    dicts: Option<&Path>,
    out: &Path,
    mb: &mut ManifestBuilder,
) -> CliResult<PathBuf> {
    require_file(&sources.join(SourceKind::FracList.file_name()), "frac-list")?;
    prepare_out(out)?;
    mb.input(sources)?;
    let dict_set = match dicts {
        Some(d) if !d.is_dir() => return Err(usage!("dictionary directory {} not found", d.display())),
        Some(d) => {
            mb.input(d)?;
            load_dictionaries(d)?
        }
        None => DictionarySet::new(),
    };
    let docs = read_source_dir(sources)?;
    let (merged, merge) = mb.timed("ingest", || merge_sources_logged(&docs, &dict_set))?;
    let target = &cfg.ingest.target;
    let t = merged
        .column_index(target)
        .map_err(|_| usage!("target column `{target}` not produced by the sources (no production report?)"))?;
    let keep: Vec<usize> = (0..merged.n_rows()).filter(|&i| !merged.columns()[t].is_missing(i)).collect();
    let rows_without_target = merged.n_rows() - keep.len();
    if keep.is_empty() {
        return Err(usage!("no row has an observed `{target}`"));
    }
    let merged = merged.select_rows(&keep);
    // post-frac production other than the target is never a model input
    let (cols, dropped): (Vec<usize>, Vec<usize>) = (0..merged.n_cols())
        .partition(|&j| j == t || merged.columns()[j].meta.group != ColumnGroup::Production);
    let table = encode_categories(&merged.select_columns(&cols), cfg.ingest.encoding)?;
    let path = out.join(TABLE_FILE);
    write_csv(&table, &path)?;
    write_json(
        &out.join("merge_log.json"),
        &IngestLog {
            schema_version: SCHEMA_VERSION,
            merge,
            rows_without_target,
            dropped_columns: dropped.iter().map(|&j| merged.columns()[j].name().to_string()).collect(),
            rows: table.n_rows(),
            columns: table.n_cols(),
        },
    )?;
    info!("ingest: {} rows x {} columns", table.n_rows(), table.n_cols());
    Ok(path)
}

pub fn ingest(cfg: &RunConfig, a: &IngestArgs) -> CliResult<()> {
    let mut mb = ManifestBuilder::new("ingest", cfg);
    run_ingest(cfg, &a.sources, a.dicts.as_deref(), &a.out, &mut mb)?;
    mb.finish(&a.out)?;
    Ok(())
}

// ---- impute

/// Cluster id per row from a `clusters.csv`, checked against the table keys.
fn read_labels(path: &Path, table: &FieldTable) -> CliResult<Vec<String>> {
    require_file(path, "labels file")?;
    let mut r = csv::Reader::from_path(path).map_err(|e| usage!("labels file: {e}"))?;
    let headers = r.headers().map_err(|e| usage!("labels file: {e}"))?.clone();
    let pos = |name: &str| headers.iter().position(|h| h == name).ok_or_else(|| usage!("labels file has no `{name}` column"));
    let (f, w, l, d, c) = (pos("field_id")?, pos("well_id")?, pos("layer_id")?, pos("op_date")?, pos("cluster")?);
    let mut out = Vec::with_capacity(table.n_rows());
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| usage!("labels file: {e}"))?;
        let key = table.keys().get(i).ok_or_else(|| usage!("labels file has more rows than the table"))?;
        if rec[f] != key.field_id || rec[w] != key.well_id || rec[l] != key.layer_id || rec[d] != format_date(key.op_date) {
            return Err(usage!("labels file row {} does not match the table key", i + 1));
        }
        out.push(rec[c].to_string());
    }
    if out.len() != table.n_rows() {
        return Err(usage!("labels file has {} rows, table has {}", out.len(), table.n_rows()));
    }
    Ok(out)
}

/// Split every non-target numeric column holding negative values into a
/// magnitude and a sign flag so the factorization sees nonnegative data.
fn split_negative_columns(mut table: FieldTable) -> CliResult<FieldTable> {
    let names: Vec<String> = table
        .columns()
        .iter()
        .filter(|c| c.is_numeric() && !c.meta.target && c.observed().iter().any(|&v| v < 0.0))
        .map(|c| c.name().to_string())
        .collect();
    for n in names {
        table = split_signed_column(&table, &n)?;
    }
    Ok(table)
}

struct ImputeRequest<'a> {
    method: Method,
    rank: Option<usize>,
    labels: Option<&'a Path>,
    threshold: f64,
}

fn run_impute(cfg: &RunConfig, input: &Path, req: &ImputeRequest, out: &Path, mb: &mut ManifestBuilder) -> CliResult<PathBuf> {
    let table = read_table(input)?;
    let ic = &cfg.impute;
    let low_rank = matches!(req.method, Method::Nnmf | Method::Tsvd);
    if req.rank.is_some() && !low_rank {
        return Err(usage!("--rank applies to nnmf and tsvd only"));
    }
    if req.labels.is_some() != (req.method == Method::ClusterMean) {
        return Err(usage!("a labels file is required by cluster_mean and accepted by no other method"));
    }
    prepare_out(out)?;
    mb.input(input)?;
    let labels = match req.labels {
        Some(p) => {
            mb.input(p)?;
            Some(read_labels(p, &table)?)
        }
        None => None,
    };
    let stage_seed = seed::derive(cfg.seed, "impute");
    mb.seed("impute", stage_seed);
    let ct: CompletedTable = mb.timed("impute", || -> CliResult<CompletedTable> {
        Ok(match req.method {
            Method::Drop => fill_column_means(&drop_sparse_rows(&table, req.threshold)?)?,
            Method::Mean => fill_column_means(&table)?,
            Method::PadMean => {
                let fields: Vec<&str> = table.keys().iter().map(|k| k.field_id.as_str()).collect();
                fill_group_means(&table, &fields)?
            }
            Method::ClusterMean => fill_group_means(&table, labels.as_deref().unwrap_or_default())?,
            Method::Tsvd => {
                let rank = match req.rank {
                    Some(r) => r,
                    None => select_rank(&table)?,
                };
                tsvd_impute(&table, rank, ic.max_iters, ic.tol)?
            }
            Method::Nnmf => {
                let split = split_negative_columns(table.clone())?;
                let rank = match req.rank {
                    Some(r) => r,
                    None => select_rank(&split)?,
                };
                nnmf_impute(&split, NnmfParams { rank, max_iters: ic.max_iters, tol: ic.tol, seed: stage_seed })?
            }
        })
    })?;
    let path = out.join(COMPLETED_FILE);
    write_completed(&ct, &path)?;
    info!(
        "impute: {:?} filled {} cells, {} rows kept",
        req.method,
        ct.imputed_count(),
        ct.table.n_rows()
    );
    Ok(path)
}

pub fn impute(cfg: &RunConfig, a: &ImputeArgs) -> CliResult<()> {
    let mut mb = ManifestBuilder::new("impute", cfg);
    let req = ImputeRequest {
        method: a.method.unwrap_or(cfg.impute.method),
        rank: a.rank.or(cfg.impute.rank),
        labels: a.labels.as_deref(),
        threshold: a.threshold.unwrap_or(cfg.impute.drop_threshold),
    };
    run_impute(cfg, &a.input, &req, &a.out, &mut mb)?;
    mb.finish(&a.out)?;
    Ok(())
}

// ---- cluster

#[derive(Serialize)]
struct ClusterSummary {
    schema_version: u32,
    columns: Vec<String>,
    eps: f64,
    min_pts: usize,
    n_clusters: usize,
    noise: usize,
    cluster_sizes: Vec<usize>,
    embedded_rows: usize,
    /// Excess kurtosis per column; null for a constant column.
    kurtosis: Vec<(String, Option<f64>)>,
}

/// Standardized numeric inputs, leaving out one-hot indicator columns.
fn cluster_matrix(table: &FieldTable) -> CliResult<(Vec<String>, Matrix)> {
    let cols: Vec<usize> = table
        .feature_indices()
        .into_iter()
        .filter(|&j| !table.columns()[j].name().contains('='))
        .collect();
    if cols.is_empty() {
        return Err(usage!("table has no numeric input columns to cluster"));
    }
    let mut x = table
        .numeric_matrix(&cols)
        .map_err(|e| usage!("{e}; impute the table before clustering"))?;
    let (n, m) = (x.rows(), x.cols());
    for j in 0..m {
        let c = x.column(j);
        let mean = c.iter().sum::<f64>() / n as f64;
        let sd = (c.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
        let sd = if sd > 0.0 { sd } else { 1.0 };
        for i in 0..n {
            x.set(i, j, (c[i] - mean) / sd);
        }
    }
    Ok((cols.iter().map(|&j| table.columns()[j].name().to_string()).collect(), x))
}

fn run_cluster(cfg: &RunConfig, input: &Path, out: &Path, mb: &mut ManifestBuilder) -> CliResult<PathBuf> {
    let table = read_table(input)?;
    let (names, x) = cluster_matrix(&table)?;
    prepare_out(out)?;
    mb.input(input)?;
    let cc = &cfg.cluster;
    let stage_seed = seed::derive(cfg.seed, "cluster");
    mb.seed("cluster", stage_seed);
    let (labels, scores) = mb.timed("dbscan_iforest", || -> CliResult<_> {
        let eps = match cc.eps {
            Some(e) => e,
            None => default_eps(&x, cc.min_pts)?,
        };
        let labels = dbscan(&x, eps, cc.min_pts)?;
        let sub = cc.iforest_subsample.min(x.rows());
        let scores = isolation_forest_scores(&x, cc.iforest_trees, sub, seed::derive(stage_seed, "iforest"))?;
        Ok((labels, scores))
    })?;
    let n_embed = x.rows().min(cc.tsne_max_rows);
    let embedding = mb.timed("tsne", || -> CliResult<Option<Matrix>> {
        if n_embed < 3 {
            return Ok(None);
        }
        let rows: Vec<usize> = (0..n_embed).collect();
        let params = TsneParams {
            perplexity: cc.tsne.perplexity.min((n_embed - 1) as f64 / 3.0),
            seed: seed::derive(stage_seed, "tsne"),
            ..cc.tsne
        };
        Ok(Some(tsne_embed(&x.select_rows(&rows), params)?))
    })?;
    let path = out.join(CLUSTERS_FILE);
    let mut w = csv::Writer::from_path(&path).map_err(|e| CliError::Internal(e.into()))?;
    w.write_record(["field_id", "well_id", "layer_id", "op_date", "tsne_x", "tsne_y", "cluster", "anomaly_score"])
        .map_err(|e| CliError::Internal(e.into()))?;
    for (i, k) in table.keys().iter().enumerate() {
        let (ex, ey) = match &embedding {
            Some(e) if i < e.rows() => (e.get(i, 0).to_string(), e.get(i, 1).to_string()),
            _ => (String::new(), String::new()),
        };
        w.write_record([
            k.field_id.clone(),
            k.well_id.clone(),
            k.layer_id.clone(),
            format_date(k.op_date),
            ex,
            ey,
            labels.labels[i].to_string(),
            scores.scores[i].to_string(),
        ])
        .map_err(|e| CliError::Internal(e.into()))?;
    }
    w.flush()?;
    let k = labels.n_clusters();
    let mut sizes = vec![0; k];
    for &l in labels.labels.iter().filter(|&&l| l != NOISE) {
        sizes[l as usize] += 1;
    }
    write_json(
        &out.join("cluster_summary.json"),
        &ClusterSummary {
            schema_version: SCHEMA_VERSION,
            kurtosis: names.iter().enumerate().map(|(j, n)| (n.clone(), kurtosis(&x.column(j)).ok())).collect(),
            columns: names,
            eps: labels.eps,
            min_pts: labels.min_pts,
            n_clusters: k,
            noise: labels.noise_count(),
            cluster_sizes: sizes,
            embedded_rows: embedding.as_ref().map_or(0, Matrix::rows),
        },
    )?;
    info!("cluster: {k} clusters, {} noise rows", labels.noise_count());
    Ok(path)
}

pub fn cluster(cfg: &RunConfig, a: &TableArgs) -> CliResult<()> {
    let mut mb = ManifestBuilder::new("cluster", cfg);
    run_cluster(cfg, &a.input, &a.out, &mut mb)?;
    mb.finish(&a.out)?;
    Ok(())
}

// ---- train

#[derive(Serialize)]
struct TrainReport {
    schema_version: u32,
    model: String,
    trainer: TrainerSpec,
    rows: usize,
    features: usize,
    cv_mean_r2: f64,
    cv_std_r2: f64,
    test_r2: f64,
    /// Same setup trained on `ln(1 + y)`, scored on the original scale.
    test_r2_log_target: Option<f64>,
    grid_cells: Option<usize>,
}

fn run_train(
    cfg: &RunConfig,
    input: &Path,
    grid_path: Option<&Path>,
    log_target: bool,
    out: &Path,
    mb: &mut ManifestBuilder,
) -> CliResult<PathBuf> {
    let table = read_table(input)?;
    let tc = &cfg.train;
    if table.column_index(&tc.target).is_err() {
        return Err(usage!("target column `{}` absent from {}", tc.target, input.display()));
    }
    let grid: Option<GridSpec> = match grid_path {
        Some(p) => {
            require_file(p, "grid file")?;
            let text = std::fs::read_to_string(p)?;
            Some(serde_json::from_str(&text).map_err(|e| usage!("grid file {}: {e}", p.display()))?)
        }
        None => tc.grid.clone(),
    };
    let data = Dataset::from_table(&table, &tc.target)?;
    prepare_out(out)?;
    mb.input(input)?;
    if let Some(p) = grid_path {
        mb.input(p)?;
    }
    let stage_seed = seed::derive(cfg.seed, "train");
    mb.seed("train", stage_seed);
    let cv = CvConfig { k: tc.k, test_frac: tc.test_frac, n_bins: tc.n_bins, seed: stage_seed };
    let mut trainer = tc.trainer.clone();
    let mut grid_cells = None;
    if let Some(g) = &grid {
        let res = mb.timed("grid_search", || grid_search(&data, g, &trainer, &cv))?;
        write_grid_csv(&res, &out.join("grid.csv"))?;
        if let ModelSpec::Gbdt { val_frac, .. } = trainer.model {
            trainer.model = ModelSpec::Gbdt { params: res.best, val_frac };
        }
        grid_cells = Some(res.cells.len());
        info!("train: grid best depth {} l2 {}", res.best.depth, res.best.l2_leaf);
    }
    let (report, fitted) = mb.timed("fit", || kfold_cv_fit(&data, &trainer, &cv))?;
    write_cv_csv(&report, &out.join("cv.csv"))?;
    let mut w = csv::Writer::from_path(out.join("test_predictions.csv")).map_err(|e| CliError::Internal(e.into()))?;
    w.write_record(["row", "actual", "predicted"]).map_err(|e| CliError::Internal(e.into()))?;
    for ((r, y), p) in report.test_rows.iter().zip(&report.test_y).zip(&report.test_predictions) {
        w.write_record([r.to_string(), y.to_string(), p.to_string()]).map_err(|e| CliError::Internal(e.into()))?;
    }
    w.flush()?;
    let log_r2 = if log_target || tc.log_target_report {
        let lt = TrainerSpec { log_target: true, ..trainer.clone() };
        Some(mb.timed("fit_log_target", || kfold_cv(&data, &lt, &cv))?.test_r2)
    } else {
        None
    };
    let meta = ModelMeta {
        target: tc.target.clone(),
        features: data.features.clone(),
        test_frac: tc.test_frac,
        n_bins: tc.n_bins,
        seed: stage_seed,
        trainer: trainer.clone(),
    };
    let path = out.join(MODEL_FILE);
    ModelFile::new(meta, fitted).write(&path)?;
    write_json(
        &out.join("train_report.json"),
        &TrainReport {
            schema_version: SCHEMA_VERSION,
            model: trainer.model.name().to_string(),
            trainer,
            rows: data.n(),
            features: data.features.len(),
            cv_mean_r2: report.mean,
            cv_std_r2: report.std,
            test_r2: report.test_r2,
            test_r2_log_target: log_r2,
            grid_cells,
        },
    )?;
    info!("train: test R2 {:.4}", report.test_r2);
    Ok(path)
}

pub fn train(cfg: &RunConfig, a: &TrainArgs) -> CliResult<()> {
    let mut mb = ManifestBuilder::new("train", cfg);
    run_train(cfg, &a.input, a.grid.as_deref(), a.log_target, &a.out, &mut mb)?;
    mb.finish(&a.out)?;
    Ok(())
}

// ---- analyze

fn run_analyze(
    cfg: &RunConfig,
    model: &Path,
    input: &Path,
    all_features: bool,
    out: &Path,
    mb: &mut ManifestBuilder,
) -> CliResult<analysis::AnalysisReport> {
    require_file(model, "model file")?;
    let file = ModelFile::read(model)?;
    let table = read_table(input)?;
    prepare_out(out)?;
    mb.input(model)?;
    mb.input(input)?;
    let acfg = AnalysisConfig { all_features: all_features || cfg.analyze.all_features, ..cfg.analyze };
    let report = mb.timed("analyze", || analysis::analyze(&file, &table, &acfg))?;
    write_report(&report, out, acfg.hist_bins)?;
    info!(
        "analyze: RFE keeps {} features, CI [{:.3}, {:.3}]",
        report.rfe.selected, report.bootstrap.lower, report.bootstrap.upper
    );
    Ok(report)
}

pub fn analyze(cfg: &RunConfig, a: &AnalyzeArgs) -> CliResult<()> {
    let mut mb = ManifestBuilder::new("analyze", cfg);
    run_analyze(cfg, &a.model, &a.input, a.all_features, &a.out, &mut mb)?;
    mb.finish(&a.out)?;
    Ok(())
}

// ---- report

#[derive(Serialize)]
struct Summary {
    schema_version: u32,
    seed: u64,
    impute_method: Method,
    rows: usize,
    test_r2: f64,
    rfe_selected: usize,
    top_features: Vec<String>,
    bootstrap_point: f64,
    bootstrap_lower: f64,
    bootstrap_upper: f64,
}

pub fn report(cfg: &RunConfig, a: &OutArgs) -> CliResult<()> {
    let out = &a.out;
    prepare_out(out)?;
    let mut mb = ManifestBuilder::new("report", cfg);
    let s = run_synth(cfg, &out.join("synth"), &mut mb)?;
    let table = run_ingest(cfg, &s.sources, Some(&s.dicts), &out.join("ingest"), &mut mb)?;
    let ic = &cfg.impute;
    let req = |method, labels| ImputeRequest { method, rank: ic.rank, labels, threshold: ic.drop_threshold };
    let completed = if ic.method == Method::ClusterMean {
        // clusters need complete data, so cluster a mean-filled copy first
        let pre = run_impute(cfg, &table, &req(Method::Mean, None), &out.join("impute_pre"), &mut mb)?;
        let clusters = run_cluster(cfg, &pre, &out.join("cluster"), &mut mb)?;
        run_impute(cfg, &table, &req(Method::ClusterMean, Some(&clusters)), &out.join("impute"), &mut mb)?
    } else {
        let done = run_impute(cfg, &table, &req(ic.method, None), &out.join("impute"), &mut mb)?;
        run_cluster(cfg, &done, &out.join("cluster"), &mut mb)?;
        done
    };
    let model = run_train(cfg, &completed, None, false, &out.join("train"), &mut mb)?;
    let rep = run_analyze(cfg, &model, &completed, false, &out.join("analyze"), &mut mb)?;
    let ct = read_csv(&completed)?;
    let train_text = std::fs::read_to_string(out.join("train").join("train_report.json"))?;
    let train: serde_json::Value = serde_json::from_str(&train_text).map_err(|e| CliError::Internal(e.into()))?;
    write_json(
        &out.join("summary.json"),
        &Summary {
            schema_version: SCHEMA_VERSION,
            seed: cfg.seed,
            impute_method: ic.method,
            rows: ct.n_rows(),
            test_r2: train["test_r2"].as_f64().unwrap_or(f64::NAN),
            rfe_selected: rep.rfe.selected,
            top_features: rep.importance.iter().take(10).map(|i| i.feature.clone()).collect(),
            bootstrap_point: rep.bootstrap.point,
            bootstrap_lower: rep.bootstrap.lower,
            bootstrap_upper: rep.bootstrap.upper,
        },
    )?;
    mb.finish(out)?;
    Ok(())
}
