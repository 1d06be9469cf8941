//! Raw source documents for a synthetic table, in the layouts ingest reads.

use std::collections::BTreeSet;

use super::{feature_catalog, FeatureSpec, PROPPANT_COLUMN};
use crate::error::{Error, Result};
use crate::ingest::{format_date, format_month, month_of_day, stage_rule, SourceDoc, SourceKind, StageRule, TARGET_COLUMN};
use crate::seed::fnv1a64;
use crate::table::io::format_f64;
use crate::table::FieldTable;

fn cell(v: Option<f64>) -> String {
    v.map(format_f64).unwrap_or_default()
}

fn header(kind: SourceKind, free: &[&FeatureSpec]) -> Vec<String> {
    kind.fixed_header()
        .iter()
        .map(|s| s.to_string())
        .chain(free.iter().map(|f| f.name.clone()))
        .collect()
}

/// Split a generated table into the seven raw documents. Design values
/// that add up over stages are divided evenly between the stage rows; the
/// three post-frac production months sum to the target.
pub fn export_sources(table: &FieldTable) -> Result<Vec<SourceDoc>> {
    let n = table.n_rows();
    let n_numeric = table.columns().iter().filter(|c| c.is_numeric() && !c.meta.target).count();
    let catalog = feature_catalog(n_numeric);
    let value = |i: usize, name: &str| -> Result<Option<f64>> { Ok(table.column(name)?.num(i)) };
    let of = |kind: SourceKind| -> Vec<&FeatureSpec> {
        catalog.iter().filter(|f| f.source == kind && f.name != "n_stages").collect()
    };
    let keys = table.keys();
    let key3 = |i: usize| vec![keys[i].field_id.clone(), keys[i].well_id.clone(), keys[i].layer_id.clone()];
    let stages = table.column("n_stages")?;
    let proppant = table.column(PROPPANT_COLUMN)?;
    let target = table.column(TARGET_COLUMN)?;
    let mut docs = Vec::with_capacity(7);

    let frac_cols = of(SourceKind::FracList);
    let mut h = header(SourceKind::FracList, &frac_cols);
    h.push(PROPPANT_COLUMN.to_string());
    let mut rows = Vec::new();
    for i in 0..n {
        let s = stages.num(i).ok_or_else(|| Error::invalid(format!("row {i} lacks a stage count")))? as usize;
        for stage in 1..=s {
            let mut r = key3(i);
            r.push(format_date(keys[i].op_date));
            r.push(stage.to_string());
            for f in &frac_cols {
                let v = value(i, &f.name)?;
                r.push(cell(match stage_rule(&f.name) {
                    StageRule::Sum => v.map(|x| x / s as f64),
                    StageRule::Mean => v,
                }));
            }
            r.push(proppant.cat(i).unwrap_or_default().to_string());
            rows.push(r);
        }
    }
    docs.push(SourceDoc::new(SourceKind::FracList, h, rows)?);

    let mut rows = Vec::new();
    for i in 0..n {
        let y = target.num(i).ok_or_else(|| Error::invalid(format!("row {i} lacks a target")))?;
        let frac_month = month_of_day(keys[i].op_date)?;
        let h = fnv1a64(keys[i].well_id.as_bytes());
        let wc0 = 0.2 + (h % 40) as f64 / 100.0;
        // pre-frac rates are model inputs, so they must not carry the target
        let base = 10.0 + ((h >> 8) % 40) as f64;
        for offset in -3i64..=12 {
            let oil = match offset {
                ..=-1 => base,
                0 => 0.5 * base,
                1 => 0.38 * y,
                2 => 0.33 * y,
                3 => y - 0.38 * y - 0.33 * y,
                k => 0.29 * y * 0.93f64.powi(k as i32 - 3),
            };
            let wc = (wc0 + 0.01 * offset.max(0) as f64).min(0.95);
            let mut r = key3(i);
            r.push(format_month(frac_month + offset));
            r.push(format_f64(oil));
            r.push(format_f64(oil / (1.0 - wc)));
            r.push(format_f64(60.0 * oil));
            r.push(format_f64(wc));
            r.push(format_f64(if offset == 0 { 360.0 } else { 720.0 - (h % 24) as f64 }));
            rows.push(r);
        }
    }
    docs.push(SourceDoc::new(
        SourceKind::MonthlyProduction,
        header(SourceKind::MonthlyProduction, &[]),
        rows,
    )?);

    let op_cols = of(SourceKind::OperatingPractice);
    let rows = (0..n)
        .map(|i| {
            let mut r = key3(i);
            r.push(format_date(keys[i].op_date));
            for f in &op_cols {
                r.push(cell(value(i, &f.name)?));
            }
            Ok(r)
        })
        .collect::<Result<Vec<_>>>()?;
    docs.push(SourceDoc::new(SourceKind::OperatingPractice, header(SourceKind::OperatingPractice, &op_cols), rows)?);

    let geo_cols = of(SourceKind::Geomechanics);
    let rows = (0..n)
        .map(|i| {
            let mut r = key3(i);
            for f in &geo_cols {
                r.push(cell(value(i, &f.name)?));
            }
            Ok(r)
        })
        .collect::<Result<Vec<_>>>()?;
    docs.push(SourceDoc::new(SourceKind::Geomechanics, header(SourceKind::Geomechanics, &geo_cols), rows)?);

    let layers: BTreeSet<(String, String)> =
        keys.iter().map(|k| (k.field_id.clone(), k.layer_id.clone())).collect();
    let mut h: Vec<String> = SourceKind::Pvt.fixed_header().iter().map(|s| s.to_string()).collect();
    h.extend(["oil_viscosity".to_string(), "oil_density".to_string()]);
    let rows = layers
        .into_iter()
        .map(|(f, l)| {
            let code = fnv1a64(format!("{f}/{l}").as_bytes());
            let visc = 1.0 + (code % 100) as f64 / 20.0;
            let dens = 0.8 + ((code >> 8) % 100) as f64 / 1000.0;
            vec![f, l, format_f64(visc), format_f64(dens)]
        })
        .collect();
    docs.push(SourceDoc::new(SourceKind::Pvt, h, rows)?);

    let li_cols = of(SourceKind::LayerIntersection);
    let perf = |i: usize| {
        let top = 1700.0 + (fnv1a64(keys[i].well_id.as_bytes()) % 400) as f64;
        (top, top + 12.0)
    };
    let rows = (0..n)
        .map(|i| {
            let (top, bottom) = perf(i);
            let mut r = key3(i);
            r.push(format_f64(top));
            r.push(format_f64(bottom));
            for f in &li_cols {
                r.push(cell(value(i, &f.name)?));
            }
            Ok(r)
        })
        .collect::<Result<Vec<_>>>()?;
    docs.push(SourceDoc::new(SourceKind::LayerIntersection, header(SourceKind::LayerIntersection, &li_cols), rows)?);

    let mut rows = Vec::new();
    for i in 0..n {
        let (top, bottom) = perf(i);
        let perm = value(i, "permeability")?.unwrap_or(5.0).max(0.01);
        let poro = 0.12 + (i % 50) as f64 / 500.0;
        for (a, b, pay, k, clay, so) in [
            (top - 6.0, top + 2.0, false, 0.1, 0.35, 0.1),
            (top + 2.0, top + 9.0, true, perm, 0.08, 0.65),
            (top + 9.0, bottom + 4.0, false, 0.2, 0.3, 0.15),
        ] {
            let mut r = key3(i);
            for v in [a, b, if pay { poro } else { 0.05 }, k, clay, so] {
                r.push(format_f64(v));
            }
            r.push(if pay { "1" } else { "0" }.to_string());
            rows.push(r);
        }
    }
    docs.push(SourceDoc::new(SourceKind::WellLog, header(SourceKind::WellLog, &[]), rows)?);
    Ok(docs)
}

#[cfg(test)]
mod tests {
    use super::super::{generate_synth_db, proppant_dictionaries, SynthConfig};
    use super::*;
    use crate::ingest::merge_sources;

    #[test]
    fn ingest_rebuilds_one_row_per_well_with_the_target() {
        let cfg = SynthConfig { n_wells: 60, n_fields: 4, missing_fraction: 0.1, ..SynthConfig::default() };
        let (t, _) = generate_synth_db(&cfg, 3).unwrap();
        let docs = export_sources(&t).unwrap();
        assert_eq!(docs.len(), 7);
        let merged = merge_sources(&docs, &proppant_dictionaries().unwrap()).unwrap();
        assert_eq!(merged.n_rows(), 60);
        let mut got: Vec<(String, f64)> = (0..60)
            .map(|i| (merged.keys()[i].well_id.clone(), merged.column(TARGET_COLUMN).unwrap().num(i).unwrap()))
            .collect();
        got.sort_by(|a, b| a.0.cmp(&b.0));
        for (i, (w, y)) in got.iter().enumerate() {
            assert_eq!(*w, t.keys()[i].well_id);
            let want = t.column(TARGET_COLUMN).unwrap().num(i).unwrap();
            assert!((y - want).abs() <= 1e-9 * want.abs().max(1.0));
        }
        let a = merged.column("proppant_mass").unwrap();
        let idx = merged.keys().iter().position(|k| k.well_id == t.keys()[0].well_id).unwrap();
        match (a.num(idx), t.column("proppant_mass").unwrap().num(0)) {
            (Some(x), Some(y)) => assert!((x - y).abs() < 1e-9 * y.abs()),
            (x, y) => assert_eq!(x.is_none(), y.is_none()),
        }
    }
}
