//! CSV + sidecar JSON schema serialization.
//!
//! The CSV header is `field_id,well_id,layer_id,op_date` followed by the
//! column names. Missing cells are empty strings. Column kinds, groups and
//! units live in `<stem>.schema.json` next to the CSV.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Column, ColumnKind, ColumnMeta, FieldTable, RowKey, SCHEMA_VERSION};
use crate::error::{Error, Result};

pub const KEY_HEADER: [&str; 4] = ["field_id", "well_id", "layer_id", "op_date"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemaFile {
    pub schema_version: u32,
    pub columns: Vec<ColumnMeta>,
}

/// `out/table.csv` -> `out/table.schema.json`.
pub fn schema_path_for(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("schema.json")
}

pub fn write_schema(path: &Path, columns: &[ColumnMeta]) -> Result<()> {
    let doc = SchemaFile {
        schema_version: SCHEMA_VERSION,
        columns: columns.to_vec(),
    };
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, &doc)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_schema(path: &Path) -> Result<SchemaFile> {
    let doc: SchemaFile = serde_json::from_reader(File::open(path)?)?;
    if doc.schema_version != SCHEMA_VERSION {
        return Err(Error::Schema(format!(
            "unsupported schema_version {} in {}",
            doc.schema_version,
            path.display()
        )));
    }
    Ok(doc)
}

pub(crate) fn format_f64(v: f64) -> String {
    // Display for f64 is the shortest string that round-trips.
    format!("{v}")
}

/// Write the table CSV and its schema sidecar.
pub fn write_csv(table: &FieldTable, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    let mut header: Vec<&str> = KEY_HEADER.to_vec();
    header.extend(table.columns().iter().map(Column::name));
    w.write_record(&header)?;
    let mut record: Vec<String> = Vec::with_capacity(header.len());
    for (i, key) in table.keys().iter().enumerate() {
        record.clear();
        record.push(key.field_id.clone());
        record.push(key.well_id.clone());
        record.push(key.layer_id.clone());
        record.push(key.op_date.to_string());
        for c in table.columns() {
            record.push(match c.kind() {
                ColumnKind::Numeric => c.num(i).map(format_f64).unwrap_or_default(),
                ColumnKind::Categorical => c.cat(i).unwrap_or_default().to_owned(),
            });
        }
        w.write_record(&record)?;
    }
    w.flush()?;
    write_schema(&schema_path_for(path), &table.schema())
}

/// Read a table CSV using the sidecar schema next to it.
pub fn read_csv(path: &Path) -> Result<FieldTable> {
    let schema = read_schema(&schema_path_for(path))?;
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    let expected: Vec<&str> = KEY_HEADER
        .iter()
        .copied()
        .chain(schema.columns.iter().map(|c| c.name.as_str()))
        .collect();
    if header.iter().collect::<Vec<_>>() != expected {
        return Err(Error::Schema(format!(
            "CSV header of {} does not match its schema",
            path.display()
        )));
    }
    let m = schema.columns.len();
    let mut keys = Vec::new();
    let mut nums: Vec<Vec<Option<f64>>> = vec![Vec::new(); m];
    let mut cats: Vec<Vec<Option<String>>> = vec![Vec::new(); m];
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let op_date = rec[3]
            .parse::<i64>()
            .map_err(|_| Error::Parse(format!("row {}: bad op_date `{}`", line + 1, &rec[3])))?;
        keys.push(RowKey::new(&rec[0], &rec[1], &rec[2], op_date));
        for (j, meta) in schema.columns.iter().enumerate() {
            let cell = &rec[4 + j];
            match meta.kind {
                ColumnKind::Numeric => {
                    let v = if cell.is_empty() {
                        None
                    } else {
                        let v = cell.parse::<f64>().map_err(|_| {
                            Error::Parse(format!(
                                "row {}: column `{}` has non-numeric value `{cell}`",
                                line + 1,
                                meta.name
                            ))
                        })?;
                        v.is_finite().then_some(v)
                    };
                    nums[j].push(v);
                }
                ColumnKind::Categorical => {
                    cats[j].push((!cell.is_empty()).then(|| cell.to_owned()));
                }
            }
        }
    }
    let columns = schema
        .columns
        .into_iter()
        .zip(nums.into_iter().zip(cats))
        .map(|(meta, (n, c))| match meta.kind {
            ColumnKind::Numeric => Column::from_numeric(meta, n),
            ColumnKind::Categorical => Column::from_categorical(meta, c),
        })
        .collect();
    FieldTable::new(keys, columns)
}
