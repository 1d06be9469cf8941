//! Column-typed field table with an explicit missingness mask.
//!
//! Missing cells are tracked by a boolean mask next to the stored values. The
//! value stored under a masked cell is a placeholder (`NaN` or the empty
//! string) and every accessor returns `None` for it.

pub(crate) mod io;
pub(crate) mod split;

pub use io::{read_csv, read_schema, schema_path_for, write_csv, write_schema, SchemaFile};
pub use split::{stratified_split, SplitPair};

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Current version of every JSON document written by the crate.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnGroup {
    Formation,
    Well,
    Design,
    Production,
    Key,
}

impl ColumnGroup {
    /// Groups that make up the model input vector.
    pub fn is_input(self) -> bool {
        matches!(
            self,
            ColumnGroup::Formation | ColumnGroup::Well | ColumnGroup::Design
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnMeta {
    pub name: String,
    pub kind: ColumnKind,
    pub group: ColumnGroup,
    #[serde(default)]
    pub unit: String,
    /// Marks the regression target (cumulative 3-month oil production).
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub target: bool,
}

impl ColumnMeta {
    pub fn numeric(name: impl Into<String>, group: ColumnGroup) -> Self {
        ColumnMeta {
            name: name.into(),
            kind: ColumnKind::Numeric,
            group,
            unit: String::new(),
            target: false,
        }
    }

    pub fn categorical(name: impl Into<String>, group: ColumnGroup) -> Self {
        ColumnMeta {
            kind: ColumnKind::Categorical,
            ..ColumnMeta::numeric(name, group)
        }
    }

    pub fn with_unit(mut self, unit: impl Into<String>) -> Self {
        self.unit = unit.into();
        self
    }

    pub fn as_target(mut self) -> Self {
        self.target = true;
        self
    }
}

/// Composite row key: field, well, reservoir layer and operation date
/// (days since 1970-01-01).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RowKey {
    pub field_id: String,
    pub well_id: String,
    pub layer_id: String,
    pub op_date: i64,
}

impl RowKey {
    pub fn new(
        field_id: impl Into<String>,
        well_id: impl Into<String>,
        layer_id: impl Into<String>,
        op_date: i64,
    ) -> Self {
        RowKey {
            field_id: field_id.into(),
            well_id: well_id.into(),
            layer_id: layer_id.into(),
            op_date,
        }
    }
}

#[derive(Debug, Clone)]
pub enum ColumnData {
    Numeric(Vec<f64>),
    Categorical(Vec<String>),
}

#[derive(Debug, Clone)]
pub struct Column {
    pub meta: ColumnMeta,
    data: ColumnData,
    missing: Vec<bool>,
}

impl Column {
    pub fn from_numeric(meta: ColumnMeta, values: Vec<Option<f64>>) -> Self {
        debug_assert_eq!(meta.kind, ColumnKind::Numeric);
        let missing = values.iter().map(|v| v.is_none()).collect();
        let data = values.into_iter().map(|v| v.unwrap_or(f64::NAN)).collect();
        Column {
            meta: ColumnMeta {
                kind: ColumnKind::Numeric,
                ..meta
            },
            data: ColumnData::Numeric(data),
            missing,
        }
    }

    pub fn from_categorical(meta: ColumnMeta, values: Vec<Option<String>>) -> Self {
        let missing = values.iter().map(|v| v.is_none()).collect();
        let data = values.into_iter().map(Option::unwrap_or_default).collect();
        Column {
            meta: ColumnMeta {
                kind: ColumnKind::Categorical,
                ..meta
            },
            data: ColumnData::Categorical(data),
            missing,
        }
    }

    /// Fully observed numeric column.
    pub fn dense(meta: ColumnMeta, values: Vec<f64>) -> Self {
        Column::from_numeric(meta, values.into_iter().map(Some).collect())
    }

    pub fn name(&self) -> &str {
        &self.meta.name
    }

    pub fn kind(&self) -> ColumnKind {
        self.meta.kind
    }

    pub fn len(&self) -> usize {
        self.missing.len()
    }

    pub fn is_empty(&self) -> bool {
        self.missing.is_empty()
    }

    pub fn is_numeric(&self) -> bool {
        self.meta.kind == ColumnKind::Numeric
    }

    #[inline]
    pub fn is_missing(&self, row: usize) -> bool {
        self.missing[row]
    }

    pub fn missing_mask(&self) -> &[bool] {
        &self.missing
    }

    pub fn missing_count(&self) -> usize {
        self.missing.iter().filter(|&&m| m).count()
    }

    /// Numeric cell value, `None` when missing or when the column is categorical.
    #[inline]
    pub fn num(&self, row: usize) -> Option<f64> {
        match &self.data {
            ColumnData::Numeric(v) if !self.missing[row] => Some(v[row]),
            _ => None,
        }
    }

    pub fn cat(&self, row: usize) -> Option<&str> {
        match &self.data {
            ColumnData::Categorical(v) if !self.missing[row] => Some(v[row].as_str()),
            _ => None,
        }
    }

    /// Observed numeric values in row order.
    pub fn observed(&self) -> Vec<f64> {
        (0..self.len()).filter_map(|i| self.num(i)).collect()
    }

    pub fn numeric_values(&self) -> Vec<Option<f64>> {
        (0..self.len()).map(|i| self.num(i)).collect()
    }

    pub fn categorical_values(&self) -> Vec<Option<String>> {
        (0..self.len())
            .map(|i| self.cat(i).map(str::to_owned))
            .collect()
    }

    pub fn set_num(&mut self, row: usize, value: Option<f64>) {
        if let ColumnData::Numeric(v) = &mut self.data {
            v[row] = value.unwrap_or(f64::NAN);
            self.missing[row] = value.is_none();
        }
    }

    pub fn set_cat(&mut self, row: usize, value: Option<String>) {
        if let ColumnData::Categorical(v) = &mut self.data {
            self.missing[row] = value.is_none();
            v[row] = value.unwrap_or_default();
        }
    }

    pub fn select_rows(&self, rows: &[usize]) -> Column {
        let missing = rows.iter().map(|&r| self.missing[r]).collect();
        let data = match &self.data {
            ColumnData::Numeric(v) => ColumnData::Numeric(rows.iter().map(|&r| v[r]).collect()),
            ColumnData::Categorical(v) => {
                ColumnData::Categorical(rows.iter().map(|&r| v[r].clone()).collect())
            }
        };
        Column {
            meta: self.meta.clone(),
            data,
            missing,
        }
    }
}

// Placeholders under masked cells never take part in equality.
impl PartialEq for Column {
    fn eq(&self, other: &Self) -> bool {
        self.meta == other.meta
            && self.missing == other.missing
            && match (&self.data, &other.data) {
                (ColumnData::Numeric(_), ColumnData::Numeric(_)) => {
                    (0..self.len()).all(|i| self.num(i) == other.num(i))
                }
                (ColumnData::Categorical(_), ColumnData::Categorical(_)) => {
                    (0..self.len()).all(|i| self.cat(i) == other.cat(i))
                }
                _ => false,
            }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    PerRow,
    PerColumn,
}

/// Column-typed table with row keys and a missingness mask.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldTable {
    keys: Vec<RowKey>,
    columns: Vec<Column>,
}

impl FieldTable {
    pub fn new(keys: Vec<RowKey>, columns: Vec<Column>) -> Result<Self> {
        let n = keys.len();
        let mut names = HashSet::new();
        let mut targets = 0;
        for c in &columns {
            if c.len() != n {
                return Err(Error::Schema(format!(
                    "column `{}` has {} cells, expected {n}",
                    c.name(),
                    c.len()
                )));
            }
            if !names.insert(c.name()) {
                return Err(Error::Schema(format!("duplicate column `{}`", c.name())));
            }
            targets += c.meta.target as usize;
        }
        if targets > 1 {
            return Err(Error::Schema("more than one target column".into()));
        }
        let mut seen = HashSet::with_capacity(n);
        for k in &keys {
            if !seen.insert(k) {
                return Err(Error::Schema(format!(
                    "duplicate row key ({}, {}, {}, {})",
                    k.field_id, k.well_id, k.layer_id, k.op_date
                )));
            }
        }
        Ok(FieldTable { keys, columns })
    }

    /// Table with synthetic sequential keys, handy for matrices without
    /// field provenance.
    pub fn with_row_numbers(columns: Vec<Column>) -> Result<Self> {
        let n = columns.first().map_or(0, Column::len);
        let keys = (0..n)
            .map(|i| RowKey::new("-", format!("r{i}"), "-", 0))
            .collect();
        FieldTable::new(keys, columns)
    }

    pub fn n_rows(&self) -> usize {
        self.keys.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn keys(&self) -> &[RowKey] {
        &self.keys
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn columns_mut(&mut self) -> &mut [Column] {
        &mut self.columns
    }

    pub fn into_parts(self) -> (Vec<RowKey>, Vec<Column>) {
        (self.keys, self.columns)
    }

    pub fn schema(&self) -> Vec<ColumnMeta> {
        self.columns.iter().map(|c| c.meta.clone()).collect()
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c.name() == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_owned()))
    }

    pub fn column(&self, name: &str) -> Result<&Column> {
        Ok(&self.columns[self.column_index(name)?])
    }

    /// Index of the target column; exactly one column must carry the marker.
    pub fn target_index(&self) -> Result<usize> {
        let mut it = self.columns.iter().enumerate().filter(|(_, c)| c.meta.target);
        match (it.next(), it.next()) {
            (Some((i, c)), None) if c.is_numeric() => Ok(i),
            (Some(_), None) => Err(Error::Schema("target column must be numeric".into())),
            (None, _) => Err(Error::Schema("no target column in schema".into())),
            _ => Err(Error::Schema("more than one target column".into())),
        }
    }

    pub fn numeric_indices(&self) -> Vec<usize> {
        (0..self.columns.len())
            .filter(|&j| self.columns[j].is_numeric())
            .collect()
    }

    /// Numeric input-group columns, excluding the target.
    pub fn feature_indices(&self) -> Vec<usize> {
        (0..self.columns.len())
            .filter(|&j| {
                let c = &self.columns[j];
                c.is_numeric() && !c.meta.target && c.meta.group.is_input()
            })
            .collect()
    }

    pub fn missing_count(&self) -> usize {
        self.columns.iter().map(Column::missing_count).sum()
    }

    pub fn cell_count(&self) -> usize {
        self.n_rows() * self.n_cols()
    }

    pub fn select_rows(&self, rows: &[usize]) -> FieldTable {
        FieldTable {
            keys: rows.iter().map(|&r| self.keys[r].clone()).collect(),
            columns: self.columns.iter().map(|c| c.select_rows(rows)).collect(),
        }
    }

    pub fn select_columns(&self, cols: &[usize]) -> FieldTable {
        FieldTable {
            keys: self.keys.clone(),
            columns: cols.iter().map(|&j| self.columns[j].clone()).collect(),
        }
    }

    pub fn replace_columns(&self, columns: Vec<Column>) -> Result<FieldTable> {
        FieldTable::new(self.keys.clone(), columns)
    }

    /// Dense matrix of the given numeric columns; fails on any missing cell.
    pub fn numeric_matrix(&self, cols: &[usize]) -> Result<Matrix> {
        let n = self.n_rows();
        let mut data = Vec::with_capacity(n * cols.len());
        for i in 0..n {
            for &j in cols {
                let c = &self.columns[j];
                match c.num(i) {
                    Some(v) => data.push(v),
                    None if c.is_numeric() => {
                        return Err(Error::invalid(format!(
                            "column `{}` has a missing cell at row {i}",
                            c.name()
                        )))
                    }
                    None => {
                        return Err(Error::invalid(format!(
                            "column `{}` is not numeric",
                            c.name()
                        )))
                    }
                }
            }
        }
        Matrix::from_vec(n, cols.len(), data)
    }

    /// Fully observed numeric values of one column.
    pub fn numeric_vector(&self, col: usize) -> Result<Vec<f64>> {
        Ok(self.numeric_matrix(&[col])?.as_slice().to_vec())
    }
}

/// Fraction of missing cells per row or per column, over all columns.
pub fn missing_fraction(table: &FieldTable, axis: Axis) -> Result<Vec<f64>> {
    if table.n_rows() == 0 || table.n_cols() == 0 {
        return Err(Error::EmptyInput);
    }
    Ok(match axis {
        Axis::PerColumn => table
            .columns
            .iter()
            .map(|c| c.missing_count() as f64 / table.n_rows() as f64)
            .collect(),
        Axis::PerRow => (0..table.n_rows())
            .map(|i| {
                let m = table.columns.iter().filter(|c| c.is_missing(i)).count();
                m as f64 / table.n_cols() as f64
            })
            .collect(),
    })
}

/// Per-column location and scale used by [`standardize`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnScaling {
    pub column: String,
    pub mean: f64,
    pub std: f64,
}

/// Standardize every numeric column over its observed cells (population
/// variance). Zero-variance columns map to 0.
pub fn standardize(table: &FieldTable) -> Result<(FieldTable, Vec<ColumnScaling>)> {
    let numeric = table.numeric_indices();
    if numeric.is_empty() {
        return Err(Error::invalid("no numeric columns to standardize"));
    }
    let mut columns = table.columns.clone();
    let mut scalings = Vec::with_capacity(numeric.len());
    for j in numeric {
        let col = &mut columns[j];
        let obs = col.observed();
        let (mean, std) = mean_std(&obs);
        for i in 0..col.len() {
            if let Some(v) = col.num(i) {
                let z = if std > 0.0 { (v - mean) / std } else { 0.0 };
                col.set_num(i, Some(z));
            }
        }
        scalings.push(ColumnScaling {
            column: col.name().to_owned(),
            mean,
            std,
        });
    }
    Ok((table.replace_columns(columns)?, scalings))
}

/// Invert [`standardize`] with the returned scalings.
pub fn unstandardize(table: &FieldTable, scalings: &[ColumnScaling]) -> Result<FieldTable> {
    let mut columns = table.columns.clone();
    for s in scalings {
        let j = table.column_index(&s.column)?;
        let col = &mut columns[j];
        for i in 0..col.len() {
            if let Some(z) = col.num(i) {
                col.set_num(i, Some(z * s.std + s.mean));
            }
        }
    }
    table.replace_columns(columns)
}

/// Population mean and standard deviation; `(0, 0)` for an empty slice.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}
