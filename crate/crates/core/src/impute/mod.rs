//! Missing-value treatments: row dropping, mean fills and low-rank completion.

mod fill;
mod io;
mod nnmf;
mod svd;
mod tsvd;

pub use fill::{drop_rows_over_count, drop_sparse_rows, fill_column_means, fill_group_means, split_signed_column};
pub use io::{flags_path_for, read_flags, record_path_for, write_completed, ImputeRecord};
pub use nnmf::{nnmf_impute, NnmfParams};
pub use svd::{jacobi_svd, Svd};
pub use tsvd::{select_rank, tsvd_impute, MAX_DEFAULT_RANK, RANK_VARIANCE_TARGET};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::table::{Column, FieldTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImputeMethod {
    DropRows,
    ColumnMean,
    GroupMean,
    Nnmf,
    Tsvd,
}

/// A table whose imputed numeric columns carry no missing cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CompletedTable {
    pub table: FieldTable,
    /// Indices (into `table`) of the columns covered by `flags`.
    pub flag_columns: Vec<usize>,
    /// Per covered column, true where the value was imputed.
    pub flags: Vec<Vec<bool>>,
    pub method: ImputeMethod,
    pub rank: Option<usize>,
    pub iterations: usize,
    pub final_objective: f64,
    /// Objective after initialization and after every iteration.
    pub objective_log: Vec<f64>,
}

impl CompletedTable {
    pub fn imputed_count(&self) -> usize {
        self.flags.iter().map(|f| f.iter().filter(|&&b| b).count()).sum()
    }
}

/// Numeric columns an imputer fills: every numeric column but the target,
/// which must be fully observed.
pub(crate) fn imputable_columns(table: &FieldTable) -> Result<Vec<usize>> {
    let target = table.columns().iter().position(|c| c.meta.target);
    if let Some(t) = target {
        if table.columns()[t].missing_count() > 0 {
            return Err(Error::invalid(format!(
                "target `{}` has missing cells; drop those rows before imputing",
                table.columns()[t].name()
            )));
        }
    }
    Ok(table
        .numeric_indices()
        .into_iter()
        .filter(|&j| Some(j) != target)
        .collect())
}

/// Dense view of the imputable columns, row-major, with a missing mask.
pub(crate) struct Masked {
    pub cols: Vec<usize>,
    pub n: usize,
    pub m: usize,
    /// Missing cells hold 0.
    pub data: Vec<f64>,
    pub missing: Vec<bool>,
}

impl Masked {
    pub fn from_table(table: &FieldTable) -> Result<Masked> {
        let cols = imputable_columns(table)?;
        let n = table.n_rows();
        let m = cols.len();
        let mut data = vec![0.0; n * m];
        let mut missing = vec![false; n * m];
        for (jj, &j) in cols.iter().enumerate() {
            let c = &table.columns()[j];
            for i in 0..n {
                match c.num(i) {
                    Some(v) => data[i * m + jj] = v,
                    None => missing[i * m + jj] = true,
                }
            }
        }
        Ok(Masked { cols, n, m, data, missing })
    }

    pub fn column_name<'a>(&self, table: &'a FieldTable, jj: usize) -> &'a str {
        table.columns()[self.cols[jj]].name()
    }

    /// Observed mean of every column; errors on a column with none.
    pub fn column_means(&self, table: &FieldTable) -> Result<Vec<f64>> {
        (0..self.m)
            .map(|jj| {
                let (mut s, mut c) = (0.0, 0usize);
                for i in 0..self.n {
                    if !self.missing[i * self.m + jj] {
                        s += self.data[i * self.m + jj];
                        c += 1;
                    }
                }
                if c == 0 {
                    Err(Error::EmptyColumn(self.column_name(table, jj).to_string()))
                } else {
                    Ok(s / c as f64)
                }
            })
            .collect()
    }

    /// Build the completed table: observed cells are copied from the source
    /// column untouched, missing cells take `fill(i, jj)`.
    pub fn complete(
        &self,
        table: &FieldTable,
        method: ImputeMethod,
        fill: impl Fn(usize, usize) -> f64,
    ) -> Result<(FieldTable, Vec<Vec<bool>>)> {
        let mut columns: Vec<Column> = table.columns().to_vec();
        let mut flags = Vec::with_capacity(self.m);
        for (jj, &j) in self.cols.iter().enumerate() {
            let src = &table.columns()[j];
            let mut f = vec![false; self.n];
            let vals: Vec<Option<f64>> = (0..self.n)
                .map(|i| match src.num(i) {
                    Some(v) => Some(v),
                    None => {
                        f[i] = true;
                        let v = fill(i, jj);
                        if !v.is_finite() {
                            return None;
                        }
                        Some(v)
                    }
                })
                .collect();
            if vals.iter().any(Option::is_none) {
                return Err(Error::invalid(format!(
                    "{method:?} produced a non-finite value in `{}`",
                    src.name()
                )));
            }
            columns[j] = Column::from_numeric(src.meta.clone(), vals);
            flags.push(f);
        }
        Ok((table.replace_columns(columns)?, flags))
    }
}

#[cfg(test)]
pub(crate) mod test_util {
    use crate::table::{Column, ColumnGroup, ColumnMeta, FieldTable};

    pub fn table(cols: &[&[Option<f64>]]) -> FieldTable {
        FieldTable::with_row_numbers(
            cols.iter()
                .enumerate()
                .map(|(j, c)| Column::from_numeric(ColumnMeta::numeric(format!("c{j}"), ColumnGroup::Formation), c.to_vec()))
                .collect(),
        )
        .unwrap()
    }
}
