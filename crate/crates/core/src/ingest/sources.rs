//! Raw source documents and their CSV layouts.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::table::ColumnGroup;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    FracList,
    MonthlyProduction,
    OperatingPractice,
    Geomechanics,
    Pvt,
    LayerIntersection,
    WellLog,
}

impl SourceKind {
    pub const ALL: [SourceKind; 7] = [
        SourceKind::FracList,
        SourceKind::MonthlyProduction,
        SourceKind::OperatingPractice,
        SourceKind::Geomechanics,
        SourceKind::Pvt,
        SourceKind::LayerIntersection,
        SourceKind::WellLog,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SourceKind::FracList => "frac_list",
            SourceKind::MonthlyProduction => "monthly_production",
            SourceKind::OperatingPractice => "operating_practice",
            SourceKind::Geomechanics => "geomechanics",
            SourceKind::Pvt => "pvt",
            SourceKind::LayerIntersection => "layer_intersection",
            SourceKind::WellLog => "well_log",
        }
    }

    pub fn file_name(self) -> String {
        format!("{}.csv", self.name())
    }

    /// Leading columns every file of this kind must start with.
    pub fn fixed_header(self) -> &'static [&'static str] {
        match self {
            SourceKind::FracList => &["field_id", "well_id", "layer_id", "op_date", "stage"],
            SourceKind::MonthlyProduction => &[
                "field_id", "well_id", "layer_id", "month", "oil", "fluid", "gas", "watercut", "hours",
            ],
            SourceKind::OperatingPractice => &["field_id", "well_id", "layer_id", "op_date"],
            SourceKind::Geomechanics => &["field_id", "well_id", "layer_id"],
            SourceKind::Pvt => &["field_id", "layer_id"],
            SourceKind::LayerIntersection => {
                &["field_id", "well_id", "layer_id", "perf_top", "perf_bottom"]
            }
            SourceKind::WellLog => &[
                "field_id",
                "well_id",
                "layer_id",
                "top",
                "bottom",
                "porosity",
                "permeability",
                "clay",
                "oil_saturation",
                "pay",
            ],
        }
    }

    /// Number of leading header columns that form the join key.
    pub fn key_width(self) -> usize {
        match self {
            SourceKind::FracList | SourceKind::OperatingPractice => 4,
            SourceKind::Pvt => 2,
            _ => 3,
        }
    }

    /// Group assigned to the free columns of this kind.
    pub fn group(self) -> ColumnGroup {
        match self {
            SourceKind::FracList => ColumnGroup::Design,
            SourceKind::MonthlyProduction => ColumnGroup::Production,
            SourceKind::Geomechanics | SourceKind::Pvt | SourceKind::WellLog => ColumnGroup::Formation,
            SourceKind::OperatingPractice | SourceKind::LayerIntersection => ColumnGroup::Well,
        }
    }
}

/// A source document as a header plus string rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceDoc {
    pub kind: SourceKind,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl SourceDoc {
    pub fn new(kind: SourceKind, header: Vec<String>, rows: Vec<Vec<String>>) -> Result<Self> {
        let fixed = kind.fixed_header();
        if header.len() < fixed.len() || header.iter().zip(fixed).any(|(h, f)| h.trim() != *f) {
            return Err(Error::Schema(format!(
                "{} header must start with {}",
                kind.name(),
                fixed.join(",")
            )));
        }
        if let Some(i) = rows.iter().position(|r| r.len() != header.len()) {
            return Err(Error::Schema(format!(
                "{} row {} has {} cells, expected {}",
                kind.name(),
                i + 1,
                rows[i].len(),
                header.len()
            )));
        }
        if let Some(i) = rows.iter().position(|r| r[0].trim().is_empty() || (kind != SourceKind::Pvt && r[1].trim().is_empty())) {
            return Err(Error::Schema(format!(
                "{} row {} lacks field or well id",
                kind.name(),
                i + 1
            )));
        }
        Ok(SourceDoc { kind, header, rows })
    }

    /// Names of the columns after the fixed header.
    pub fn free_columns(&self) -> &[String] {
        &self.header[self.kind.fixed_header().len()..]
    }

    pub fn read_csv(kind: SourceKind, path: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
        let header = rdr.headers()?.iter().map(|s| s.trim().to_string()).collect();
        let mut rows = Vec::new();
        for rec in rdr.records() {
            rows.push(rec?.iter().map(str::to_string).collect());
        }
        SourceDoc::new(kind, header, rows)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Read every `<kind>.csv` present in `dir`.
pub fn read_source_dir(dir: &Path) -> Result<Vec<SourceDoc>> {
    let mut docs = Vec::new();
    for kind in SourceKind::ALL {
        let p = dir.join(kind.file_name());
        if p.exists() {
            docs.push(SourceDoc::read_csv(kind, &p)?);
        }
    }
    Ok(docs)
}
