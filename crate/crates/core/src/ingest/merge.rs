//! Join of the seven source documents into one field table.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::cells::parse_cell;
use super::dictionary::{normalize_category, DictionarySet};
use super::logs::{aggregate_well_logs, LogInterval, WellLogFeatures};
use super::production::{
    compute_production_targets, month_of_day, parse_date, parse_month, MonthlyRecord,
    ProductionRecord, TARGET_COLUMN,
};
use super::sources::{SourceDoc, SourceKind};
use super::stages::{consolidate_stages, stage_column, StageLayout, StageRecord, STAGE_COUNT_COLUMN};
use crate::error::{Error, Result};
use crate::table::{Column, ColumnGroup, ColumnKind, ColumnMeta, FieldTable, RowKey};

/// Counts collected while merging.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MergeLog {
    pub frac_list_rows: usize,
    pub operations: usize,
    /// Auxiliary records with no matching frac-list operation, per source.
    pub unmatched: BTreeMap<String, usize>,
    /// Records discarded as duplicate keys, per source.
    pub duplicates: BTreeMap<String, usize>,
    /// Tokens rewritten to a different canonical spelling, per column.
    pub normalized: BTreeMap<String, usize>,
    /// Tokens with no dictionary entry within reach, per column.
    pub unresolved: BTreeMap<String, usize>,
    /// Well-log rows rejected as malformed intervals.
    pub rejected_intervals: usize,
}

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Num(Option<f64>),
    Cat(Option<String>),
}

impl Value {
    fn is_missing(&self) -> bool {
        matches!(self, Value::Num(None) | Value::Cat(None))
    }
}

/// A source document with its free columns typed and cells cleaned.
struct Parsed {
    kind: SourceKind,
    /// Fixed header cells after the key: raw, trimmed.
    fixed: Vec<Vec<String>>,
    keys: Vec<Vec<String>>,
    columns: Vec<(String, ColumnKind)>,
    values: Vec<Vec<Value>>,
}

impl Parsed {
    fn missing(&self, row: usize) -> usize {
        self.values[row].iter().filter(|v| v.is_missing()).count()
            + self.fixed[row].iter().filter(|s| s.is_empty()).count()
    }
}

fn infer_kind(name: &str, cells: &[&str], dicts: &DictionarySet) -> ColumnKind {
    if dicts.contains_key(name) {
        return ColumnKind::Categorical;
    }
    let present: Vec<&&str> = cells.iter().filter(|c| !c.trim().is_empty()).collect();
    let parsed = present.iter().filter(|c| parse_cell(c).is_some()).count();
    if 2 * parsed >= present.len() {
        ColumnKind::Numeric
    } else {
        ColumnKind::Categorical
    }
}

fn clean_token(column: &str, raw: &str, dicts: &DictionarySet, log: &mut MergeLog) -> Result<Option<String>> {
    let t = raw.trim();
    if t.is_empty() {
        return Ok(None);
    }
    match dicts.get(column) {
        Some(d) if !d.is_empty() => {
            let (c, matched) = normalize_category(t, d)?;
            if !matched {
                *log.unresolved.entry(column.to_string()).or_default() += 1;
            } else if c != t {
                *log.normalized.entry(column.to_string()).or_default() += 1;
            }
            Ok(Some(c))
        }
        _ => Ok(Some(t.to_string())),
    }
}

fn parse_doc(doc: &SourceDoc, dicts: &DictionarySet, log: &mut MergeLog) -> Result<Parsed> {
    let kw = doc.kind.key_width();
    let nf = doc.kind.fixed_header().len();
    let key_names = &doc.header[..kw];
    let columns: Vec<(String, ColumnKind)> = doc
        .free_columns()
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let cells: Vec<&str> = doc.rows.iter().map(|r| r[nf + j].as_str()).collect();
            (name.clone(), infer_kind(name, &cells, dicts))
        })
        .collect();
    let mut parsed = Parsed {
        kind: doc.kind,
        fixed: Vec::with_capacity(doc.rows.len()),
        keys: Vec::with_capacity(doc.rows.len()),
        columns,
        values: Vec::with_capacity(doc.rows.len()),
    };
    for row in &doc.rows {
        let mut key = Vec::with_capacity(kw);
        for (name, cell) in key_names.iter().zip(row) {
            let k = if name == "op_date" {
                cell.trim().to_string()
            } else {
                clean_token(name, cell, dicts, log)?.unwrap_or_default()
            };
            key.push(k);
        }
        parsed.keys.push(key);
        parsed
            .fixed
            .push(row[kw..nf].iter().map(|c| c.trim().to_string()).collect());
        let mut vals = Vec::with_capacity(parsed.columns.len());
        for (j, (name, kind)) in parsed.columns.iter().enumerate() {
            let cell = &row[nf + j];
            vals.push(match kind {
                ColumnKind::Numeric => Value::Num(parse_cell(cell)),
                ColumnKind::Categorical => Value::Cat(clean_token(name, cell, dicts, log)?),
            });
        }
        parsed.values.push(vals);
    }
    Ok(parsed)
}

/// Indices of rows kept after duplicate resolution on `group_key`: the row with
/// fewer missing cells wins, ties go to the first occurrence. Returned in
/// first-occurrence order of their key.
fn dedupe<K: std::hash::Hash + Eq + Clone>(
    p: &Parsed,
    group_key: impl Fn(usize) -> K,
    log: &mut MergeLog,
) -> Vec<usize> {
    let mut best: HashMap<K, usize> = HashMap::new();
    let mut order = Vec::new();
    for i in 0..p.keys.len() {
        let k = group_key(i);
        match best.get(&k) {
            None => {
                best.insert(k.clone(), i);
                order.push(k);
            }
            Some(&j) => {
                *log.duplicates.entry(p.kind.name().to_string()).or_default() += 1;
                if p.missing(i) < p.missing(j) {
                    best.insert(k, i);
                }
            }
        }
    }
    order.iter().map(|k| best[k]).collect()
}

fn date_of(text: &str) -> Result<i64> {
    parse_date(text)
}

/// Merge source documents into one table with a row per frac-list operation.
pub fn merge_sources(docs: &[SourceDoc], dicts: &DictionarySet) -> Result<FieldTable> {
    merge_sources_logged(docs, dicts).map(|(t, _)| t)
}

/// As [`merge_sources`], also returning the merge counts.
pub fn merge_sources_logged(docs: &[SourceDoc], dicts: &DictionarySet) -> Result<(FieldTable, MergeLog)> {
    let mut log = MergeLog::default();
    let mut by_kind: BTreeMap<SourceKind, &SourceDoc> = BTreeMap::new();
    for d in docs {
        if by_kind.insert(d.kind, d).is_some() {
            return Err(Error::invalid(format!("more than one {} document", d.kind.name())));
        }
    }
    let frac = by_kind.get(&SourceKind::FracList).ok_or(Error::MissingKeySource)?;
    let frac = parse_doc(frac, dicts, &mut log)?;
    log.frac_list_rows = frac.keys.len();

    // Operations in frac-list order of first appearance.
    let mut row_keys = Vec::with_capacity(frac.keys.len());
    for (i, k) in frac.keys.iter().enumerate() {
        let date = date_of(&k[3]).map_err(|e| Error::Parse(format!("frac_list row {}: {e}", i + 1)))?;
        row_keys.push(RowKey::new(&k[0], &k[1], &k[2], date));
    }
    let stage_of = |i: usize| -> Result<i64> {
        let s = &frac.fixed[i][0];
        s.parse::<f64>()
            .ok()
            .filter(|v| v.fract() == 0.0)
            .map(|v| v as i64)
            .ok_or_else(|| Error::Parse(format!("frac_list row {}: stage `{s}`", i + 1)))
    };
    let mut stage_nums = Vec::with_capacity(frac.keys.len());
    for i in 0..frac.keys.len() {
        stage_nums.push(stage_of(i)?);
    }
    let kept = dedupe(&frac, |i| (row_keys[i].clone(), stage_nums[i]), &mut log);

    let layout = StageLayout {
        numeric: frac
            .columns
            .iter()
            .filter(|c| c.1 == ColumnKind::Numeric)
            .map(|c| c.0.clone())
            .collect(),
        categorical: frac
            .columns
            .iter()
            .filter(|c| c.1 == ColumnKind::Categorical)
            .map(|c| c.0.clone())
            .collect(),
    };
    let mut groups: Vec<(RowKey, Vec<StageRecord>)> = Vec::new();
    let mut group_of: HashMap<RowKey, usize> = HashMap::new();
    for i in kept {
        let rec = StageRecord {
            key: row_keys[i].clone(),
            stage: stage_nums[i],
            numeric: frac.values[i]
                .iter()
                .filter_map(|v| match v {
                    Value::Num(x) => Some(*x),
                    _ => None,
                })
                .collect(),
            categorical: frac.values[i]
                .iter()
                .filter_map(|v| match v {
                    Value::Cat(x) => Some(x.clone()),
                    _ => None,
                })
                .collect(),
        };
        let g = *group_of.entry(rec.key.clone()).or_insert_with(|| {
            groups.push((rec.key.clone(), Vec::new()));
            groups.len() - 1
        });
        groups[g].1.push(rec);
    }
    let ops = groups
        .iter()
        .map(|(_, s)| consolidate_stages(&layout, s))
        .collect::<Result<Vec<_>>>()?;
    log.operations = ops.len();
    let keys: Vec<RowKey> = groups.into_iter().map(|(k, _)| k).collect();
    let n = keys.len();

    let mut columns: Vec<Column> = Vec::new();
    let design = ColumnGroup::Design;
    for (j, name) in layout.numeric.iter().enumerate() {
        columns.push(Column::from_numeric(
            ColumnMeta::numeric(name, design),
            ops.iter().map(|o| o.numeric[j]).collect(),
        ));
    }
    columns.push(Column::from_numeric(
        ColumnMeta::numeric(STAGE_COUNT_COLUMN, design),
        ops.iter().map(|o| Some(o.n_stages as f64)).collect(),
    ));
    if let Some(first) = ops.first() {
        for (j, (name, _)) in first.categorical.iter().enumerate() {
            columns.push(Column::from_categorical(
                ColumnMeta::categorical(name, design),
                ops.iter().map(|o| o.categorical[j].1.clone()).collect(),
            ));
        }
        let max_stages = ops.iter().map(|o| o.n_stages).max().unwrap_or(0);
        for (j, (name, _)) in first.per_stage.iter().enumerate() {
            for s in 0..max_stages {
                columns.push(Column::from_categorical(
                    ColumnMeta::categorical(stage_column(name, s + 1), design),
                    ops.iter()
                        .map(|o| o.per_stage[j].1.get(s).cloned().flatten())
                        .collect(),
                ));
            }
        }
    }

    let subset = |kind: SourceKind, k: &RowKey| -> Vec<String> {
        match kind {
            SourceKind::Pvt => vec![k.field_id.clone(), k.layer_id.clone()],
            SourceKind::OperatingPractice => vec![
                k.field_id.clone(),
                k.well_id.clone(),
                k.layer_id.clone(),
                super::production::format_date(k.op_date),
            ],
            _ => vec![k.field_id.clone(), k.well_id.clone(), k.layer_id.clone()],
        }
    };

    // One-record-per-key sources.
    let mut perf_windows: Vec<Option<(f64, f64)>> = vec![None; n];
    for kind in [
        SourceKind::OperatingPractice,
        SourceKind::LayerIntersection,
        SourceKind::Geomechanics,
        SourceKind::Pvt,
    ] {
        let Some(doc) = by_kind.get(&kind) else { continue };
        let p = parse_doc(doc, dicts, &mut log)?;
        let mut norm_keys = p.keys.clone();
        if kind == SourceKind::OperatingPractice {
            for (i, k) in norm_keys.iter_mut().enumerate() {
                let d = date_of(&k[3]).map_err(|e| Error::Parse(format!("{} row {}: {e}", kind.name(), i + 1)))?;
                k[3] = super::production::format_date(d);
            }
        }
        let kept = dedupe(&p, |i| norm_keys[i].clone(), &mut log);
        let index: HashMap<&Vec<String>, usize> = kept.iter().map(|&i| (&norm_keys[i], i)).collect();
        let matches: Vec<Option<usize>> = keys.iter().map(|k| index.get(&subset(kind, k)).copied()).collect();
        let used: std::collections::HashSet<usize> = matches.iter().flatten().copied().collect();
        let unmatched = kept.len() - used.len();
        *log.unmatched.entry(kind.name().to_string()).or_default() += unmatched;
        if unmatched > 0 {
            log::info!("{}: {unmatched} records without a frac-list operation", kind.name());
        }
        let group = kind.group();
        let mut fixed_cols: Vec<(String, Vec<Option<f64>>)> = Vec::new();
        if kind == SourceKind::LayerIntersection {
            let top: Vec<Option<f64>> = matches.iter().map(|m| m.and_then(|i| parse_cell(&p.fixed[i][0]))).collect();
            let bottom: Vec<Option<f64>> = matches.iter().map(|m| m.and_then(|i| parse_cell(&p.fixed[i][1]))).collect();
            for r in 0..n {
                if let (Some(t), Some(b)) = (top[r], bottom[r]) {
                    if b > t {
                        perf_windows[r] = Some((t, b));
                    }
                }
            }
            fixed_cols.push(("perf_top".into(), top));
            fixed_cols.push(("perf_bottom".into(), bottom));
        }
        for (name, vals) in fixed_cols {
            columns.push(Column::from_numeric(ColumnMeta::numeric(name, group), vals));
        }
        for (j, (name, ck)) in p.columns.iter().enumerate() {
            columns.push(match ck {
                ColumnKind::Numeric => Column::from_numeric(
                    ColumnMeta::numeric(name, group),
                    matches
                        .iter()
                        .map(|m| m.and_then(|i| match &p.values[i][j] {
                            Value::Num(v) => *v,
                            _ => None,
                        }))
                        .collect(),
                ),
                ColumnKind::Categorical => Column::from_categorical(
                    ColumnMeta::categorical(name, group),
                    matches
                        .iter()
                        .map(|m| m.and_then(|i| match &p.values[i][j] {
                            Value::Cat(v) => v.clone(),
                            _ => None,
                        }))
                        .collect(),
                ),
            });
        }
    }

    if let Some(doc) = by_kind.get(&SourceKind::WellLog) {
        let p = parse_doc(doc, dicts, &mut log)?;
        let mut by_layer: HashMap<Vec<String>, Vec<LogInterval>> = HashMap::new();
        for i in 0..p.keys.len() {
            let f = &p.fixed[i];
            let interval = match (parse_cell(&f[0]), parse_cell(&f[1])) {
                (Some(top), Some(bottom)) => LogInterval::new(top, bottom, parse_flag(&f[6])).ok(),
                _ => None,
            };
            match interval {
                Some(iv) => by_layer.entry(p.keys[i].clone()).or_default().push(iv.with_properties(
                    parse_cell(&f[2]),
                    parse_cell(&f[3]),
                    parse_cell(&f[4]),
                    parse_cell(&f[5]),
                )),
                None => log.rejected_intervals += 1,
            }
        }
        let mut used = std::collections::HashSet::new();
        let mut feats: Vec<Option<WellLogFeatures>> = Vec::with_capacity(n);
        for (r, k) in keys.iter().enumerate() {
            let sk = subset(SourceKind::WellLog, k);
            let Some(ivs) = by_layer.get(&sk) else {
                feats.push(None);
                continue;
            };
            used.insert(sk);
            feats.push(Some(match perf_windows[r] {
                Some((t, b)) => aggregate_well_logs(ivs, t, b)?,
                None => {
                    let top = ivs.iter().map(|iv| iv.top).fold(f64::INFINITY, f64::min);
                    let bottom = ivs.iter().map(|iv| iv.bottom).fold(f64::NEG_INFINITY, f64::max);
                    let mut f = aggregate_well_logs(ivs, top, bottom)?;
                    f.perforation = Default::default();
                    f
                }
            }));
        }
        let unmatched = by_layer.len() - used.len();
        *log.unmatched.entry(SourceKind::WellLog.name().to_string()).or_default() += unmatched;
        let empty = WellLogFeatures::column_names().into_iter().map(|n| (n, None)).collect::<Vec<_>>();
        let named: Vec<Vec<(String, Option<f64>)>> = feats
            .iter()
            .map(|f| f.as_ref().map(|f| f.named_values()).unwrap_or_else(|| empty.clone()))
            .collect();
        for (j, name) in WellLogFeatures::column_names().into_iter().enumerate() {
            columns.push(Column::from_numeric(
                ColumnMeta::numeric(name, ColumnGroup::Formation),
                named.iter().map(|v| v[j].1).collect(),
            ));
        }
    }

    if let Some(doc) = by_kind.get(&SourceKind::MonthlyProduction) {
        columns.extend(production_columns(doc, &keys, dicts, &mut log)?);
    }

    let table = FieldTable::new(keys, columns)?;
    Ok((table, log))
}

fn parse_flag(s: &str) -> bool {
    matches!(
        s.trim().to_ascii_lowercase().as_str(),
        "1" | "true" | "yes" | "y" | "pay"
    ) || parse_cell(s).is_some_and(|v| v > 0.0)
}

fn production_columns(
    doc: &SourceDoc,
    keys: &[RowKey],
    dicts: &DictionarySet,
    log: &mut MergeLog,
) -> Result<Vec<Column>> {
    let p = parse_doc(doc, dicts, log)?;
    let mut months = Vec::with_capacity(p.keys.len());
    for (i, f) in p.fixed.iter().enumerate() {
        months.push(parse_month(&f[0]).map_err(|e| Error::Parse(format!("monthly_production row {}: {e}", i + 1)))?);
    }
    let kept = dedupe(&p, |i| (p.keys[i].clone(), months[i]), log);
    let mut series: HashMap<Vec<String>, Vec<(MonthlyRecord, usize)>> = HashMap::new();
    for i in kept {
        let f = &p.fixed[i];
        let rec = MonthlyRecord {
            month: months[i],
            oil: parse_cell(&f[1]),
            fluid: parse_cell(&f[2]),
            gas: parse_cell(&f[3]),
            watercut: parse_cell(&f[4]),
            hours: parse_cell(&f[5]),
        };
        series.entry(p.keys[i].clone()).or_default().push((rec, i));
    }
    for s in series.values_mut() {
        s.sort_by_key(|(r, _)| r.month);
    }
    let extra: Vec<usize> = (0..p.columns.len()).filter(|&j| p.columns[j].1 == ColumnKind::Numeric).collect();
    let mut used = std::collections::HashSet::new();
    let mut records: Vec<ProductionRecord> = Vec::with_capacity(keys.len());
    let mut extra_vals: Vec<Vec<Option<f64>>> = vec![Vec::with_capacity(keys.len()); extra.len()];
    for k in keys {
        let sk = vec![k.field_id.clone(), k.well_id.clone(), k.layer_id.clone()];
        match series.get(&sk) {
            None => {
                records.push(ProductionRecord::default());
                for v in &mut extra_vals {
                    v.push(None);
                }
            }
            Some(s) => {
                used.insert(sk);
                let recs: Vec<MonthlyRecord> = s.iter().map(|(r, _)| r.clone()).collect();
                records.push(compute_production_targets(&recs, k.op_date)?);
                let fm = month_of_day(k.op_date)?;
                for (e, &j) in extra.iter().enumerate() {
                    let vals: Vec<f64> = s
                        .iter()
                        .filter(|(r, _)| r.month > fm && r.month <= fm + 3)
                        .filter_map(|&(_, i)| match p.values[i][j] {
                            Value::Num(v) => v,
                            _ => None,
                        })
                        .collect();
                    extra_vals[e].push((!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64));
                }
            }
        }
    }
    *log.unmatched.entry(SourceKind::MonthlyProduction.name().to_string()).or_default() += series.len() - used.len();

    let mut cols = Vec::new();
    let named: Vec<Vec<(String, Option<f64>)>> = records.iter().map(|r| r.named_values()).collect();
    for (j, name) in ProductionRecord::column_names().into_iter().enumerate() {
        // Pre-frac history is known before the job and feeds the model.
        let group = if name.starts_with("pre_frac") {
            ColumnGroup::Well
        } else {
            ColumnGroup::Production
        };
        let mut meta = ColumnMeta::numeric(&name, group);
        if name == TARGET_COLUMN {
            meta = meta.as_target();
        }
        cols.push(Column::from_numeric(meta, named.iter().map(|v| v[j].1).collect()));
    }
    for (e, &j) in extra.iter().enumerate() {
        cols.push(Column::from_numeric(
            ColumnMeta::numeric(format!("{}_mean_3m", p.columns[j].0), ColumnGroup::Production),
            std::mem::take(&mut extra_vals[e]),
        ));
    }
    Ok(cols)
}
