use rand::seq::SliceRandom;

use super::FieldTable;
use crate::error::{Error, Result};
use crate::seed;

/// Train/test partition of a table.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitPair {
    pub train: FieldTable,
    pub test: FieldTable,
    /// Row indices (into the input table) of each side, ascending.
    pub train_rows: Vec<usize>,
    pub test_rows: Vec<usize>,
    /// Interior target-quantile edges separating the stratification bins.
    pub bin_edges: Vec<f64>,
}

/// Quantile-stratified, seeded train/test split on a numeric target column.
///
/// Rows are ranked by `(target, row index)` and bin `b` receives ranks
/// `[b*N/n_bins, (b+1)*N/n_bins)`. Each edge is the midpoint between the last
/// value of one bin and the first of the next. Within every bin
/// `round(test_frac * size)` rows are drawn into the test side.
pub fn stratified_split(
    table: &FieldTable,
    target: &str,
    test_frac: f64,
    n_bins: usize,
    seed: u64,
) -> Result<SplitPair> {
    if !(test_frac > 0.0 && test_frac < 1.0) {
        return Err(Error::invalid(format!("test_frac {test_frac} outside (0, 1)")));
    }
    let n = table.n_rows();
    if n_bins == 0 || n_bins > n {
        return Err(Error::invalid(format!(
            "n_bins {n_bins} must be in 1..={n} (number of rows)"
        )));
    }
    let y = table.numeric_vector(table.column_index(target)?)?;
    let (train_rows, test_rows, bin_edges) = stratified_indices(&y, test_frac, n_bins, seed);
    Ok(SplitPair {
        train: table.select_rows(&train_rows),
        test: table.select_rows(&test_rows),
        train_rows,
        test_rows,
        bin_edges,
    })
}

/// Index-level core of [`stratified_split`], shared with resampling code.
pub(crate) fn stratified_indices(
    y: &[f64],
    test_frac: f64,
    n_bins: usize,
    seed: u64,
) -> (Vec<usize>, Vec<usize>, Vec<f64>) {
    let n = y.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| y[a].total_cmp(&y[b]).then(a.cmp(&b)));
    let mut rng = seed::rng(seed);
    let mut is_test = vec![false; n];
    let mut edges = Vec::with_capacity(n_bins.saturating_sub(1));
    for b in 0..n_bins {
        let lo = b * n / n_bins;
        let hi = (b + 1) * n / n_bins;
        if b > 0 {
            edges.push(0.5 * (y[order[lo - 1]] + y[order[lo]]));
        }
        let mut bin: Vec<usize> = order[lo..hi].to_vec();
        bin.shuffle(&mut rng);
        let take = (test_frac * bin.len() as f64).round() as usize;
        for &r in &bin[..take.min(bin.len())] {
            is_test[r] = true;
        }
    }
    let (test, train): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| is_test[i]);
    (train, test, edges)
}
