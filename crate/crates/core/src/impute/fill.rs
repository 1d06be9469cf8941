//! Row dropping, mean fills and the sign split.

use std::collections::HashMap;

use super::{CompletedTable, ImputeMethod, Masked};
use crate::error::{Error, Result};
use crate::table::{missing_fraction, Axis, Column, ColumnMeta, FieldTable};

/// Remove rows whose missing fraction (over all columns) exceeds
/// `max_missing_frac`. Remaining missing cells are left in place.
pub fn drop_sparse_rows(table: &FieldTable, max_missing_frac: f64) -> Result<FieldTable> {
    if !(0.0..=1.0).contains(&max_missing_frac) {
        return Err(Error::invalid(format!(
            "max_missing_frac {max_missing_frac} outside [0, 1]"
        )));
    }
    let frac = missing_fraction(table, Axis::PerRow)?;
    keep_rows(table, |i| frac[i] <= max_missing_frac)
}

/// Remove rows with more than `max_missing` missing cells.
pub fn drop_rows_over_count(table: &FieldTable, max_missing: usize) -> Result<FieldTable> {
    if table.n_rows() == 0 {
        return Err(Error::EmptyInput);
    }
    let counts: Vec<usize> = (0..table.n_rows())
        .map(|i| table.columns().iter().filter(|c| c.is_missing(i)).count())
        .collect();
    keep_rows(table, |i| counts[i] <= max_missing)
}

fn keep_rows(table: &FieldTable, keep: impl Fn(usize) -> bool) -> Result<FieldTable> {
    let rows: Vec<usize> = (0..table.n_rows()).filter(|&i| keep(i)).collect();
    if rows.is_empty() {
        return Err(Error::EmptyResult);
    }
    Ok(table.select_rows(&rows))
}

/// Fill every missing numeric cell with its column's observed mean.
pub fn fill_column_means(table: &FieldTable) -> Result<CompletedTable> {
    let m = Masked::from_table(table)?;
    let means = m.column_means(table)?;
    finish(&m, table, ImputeMethod::ColumnMean, |_, jj| means[jj])
}

/// Fill missing cells with the observed mean of the row's group, falling
/// back to the global column mean when the group has no observed value.
pub fn fill_group_means<S: AsRef<str>>(table: &FieldTable, groups: &[S]) -> Result<CompletedTable> {
    if groups.len() != table.n_rows() {
        return Err(Error::invalid(format!(
            "{} group labels for {} rows",
            groups.len(),
            table.n_rows()
        )));
    }
    let m = Masked::from_table(table)?;
    let global = m.column_means(table)?;
    let mut gid: HashMap<&str, usize> = HashMap::new();
    let row_group: Vec<usize> = groups
        .iter()
        .map(|g| {
            let next = gid.len();
            *gid.entry(g.as_ref()).or_insert(next)
        })
        .collect();
    let ng = gid.len();
    let mut sums = vec![0.0; ng * m.m];
    let mut counts = vec![0usize; ng * m.m];
    for i in 0..m.n {
        for jj in 0..m.m {
            if !m.missing[i * m.m + jj] {
                sums[row_group[i] * m.m + jj] += m.data[i * m.m + jj];
                counts[row_group[i] * m.m + jj] += 1;
            }
        }
    }
    finish(&m, table, ImputeMethod::GroupMean, |i, jj| {
        let k = row_group[i] * m.m + jj;
        if counts[k] > 0 {
            sums[k] / counts[k] as f64
        } else {
            global[jj]
        }
    })
}

fn finish(
    m: &Masked,
    table: &FieldTable,
    method: ImputeMethod,
    fill: impl Fn(usize, usize) -> f64,
) -> Result<CompletedTable> {
    let (t, flags) = m.complete(table, method, fill)?;
    Ok(CompletedTable {
        table: t,
        flag_columns: m.cols.clone(),
        flags,
        method,
        rank: None,
        iterations: 0,
        final_objective: 0.0,
        objective_log: Vec::new(),
    })
}

/// Replace a numeric column by its absolute value and insert a binary
/// `is_negative_<name>` column right after it. Missing cells stay missing in
/// both.
pub fn split_signed_column(table: &FieldTable, column: &str) -> Result<FieldTable> {
    let j = table.column_index(column)?;
    let src = &table.columns()[j];
    if !src.is_numeric() {
        return Err(Error::invalid(format!("column `{column}` is not numeric")));
    }
    let vals = src.numeric_values();
    let abs = Column::from_numeric(src.meta.clone(), vals.iter().map(|v| v.map(f64::abs)).collect());
    let flag = Column::from_numeric(
        ColumnMeta::numeric(format!("is_negative_{column}"), src.meta.group),
        vals.iter()
            .map(|v| v.map(|x| if x < 0.0 { 1.0 } else { 0.0 }))
            .collect(),
    );
    let mut cols = table.columns().to_vec();
    cols[j] = abs;
    cols.insert(j + 1, flag);
    table.replace_columns(cols)
}
