//! Files written for a completed table.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{CompletedTable, ImputeMethod};
use crate::error::{Error, Result};
use crate::table::{write_csv, SCHEMA_VERSION};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImputeRecord {
    pub schema_version: u32,
    pub method: ImputeMethod,
    pub rank: Option<usize>,
    pub iterations: usize,
    pub final_objective: f64,
    pub imputed_cells: usize,
    pub objective_log: Vec<f64>,
}

fn with_suffix(csv_path: &Path, suffix: &str) -> PathBuf {
    let stem = csv_path.file_stem().and_then(|s| s.to_str()).unwrap_or("table");
    csv_path.with_file_name(format!("{stem}{suffix}"))
}

/// `x.csv` -> `x.flags.csv`.
pub fn flags_path_for(csv_path: &Path) -> PathBuf {
    with_suffix(csv_path, ".flags.csv")
}

/// `x.csv` -> `x.impute.json`.
pub fn record_path_for(csv_path: &Path) -> PathBuf {
    with_suffix(csv_path, ".impute.json")
}

/// Write the table (CSV plus schema), the imputed-cell flags and the
/// method record next to `csv_path`.
pub fn write_completed(ct: &CompletedTable, csv_path: &Path) -> Result<()> {
    write_csv(&ct.table, csv_path)?;
    let mut w = csv::Writer::from_path(flags_path_for(csv_path))?;
    w.write_record(ct.flag_columns.iter().map(|&j| ct.table.columns()[j].name()))?;
    for i in 0..ct.table.n_rows() {
        w.write_record(ct.flags.iter().map(|f| if f[i] { "1" } else { "0" }))?;
    }
    w.flush()?;
    let rec = ImputeRecord {
        schema_version: SCHEMA_VERSION,
        method: ct.method,
        rank: ct.rank,
        iterations: ct.iterations,
        final_objective: ct.final_objective,
        imputed_cells: ct.imputed_count(),
        objective_log: ct.objective_log.clone(),
    };
    std::fs::write(record_path_for(csv_path), serde_json::to_string_pretty(&rec)? + "\n")?;
    Ok(())
}

/// Read a flags CSV as `(column names, per-column flags)`.
pub fn read_flags(path: &Path) -> Result<(Vec<String>, Vec<Vec<bool>>)> {
    let mut r = csv::Reader::from_path(path)?;
    let names: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let mut flags = vec![Vec::new(); names.len()];
    for rec in r.records() {
        let rec = rec?;
        for (j, cell) in rec.iter().enumerate() {
            flags[j].push(match cell {
                "1" => true,
                "0" => false,
                other => return Err(Error::Parse(format!("flag `{other}`"))),
            });
        }
    }
    Ok((names, flags))
}

#[cfg(test)]
mod tests {
    use super::super::{fill_column_means, test_util::table};
    use super::*;

    #[test]
    fn flags_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        let ct = fill_column_means(&table(&[&[Some(1.0), None], &[None, Some(2.0)]])).unwrap();
        write_completed(&ct, &p).unwrap();
        let (names, flags) = read_flags(&flags_path_for(&p)).unwrap();
        assert_eq!(names, vec!["c0", "c1"]);
        assert_eq!(flags, ct.flags);
        let rec: ImputeRecord = serde_json::from_str(&std::fs::read_to_string(record_path_for(&p)).unwrap()).unwrap();
        assert_eq!(rec.imputed_cells, 2);
    }
}
