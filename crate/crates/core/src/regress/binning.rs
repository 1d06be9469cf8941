//! Feature discretization for the tree learners.

use crate::matrix::Matrix;

/// Largest bin count the learners accept; enough for an exact split search
/// on any realistic table.
pub const EXACT_BINS: usize = 1 << 16;

/// Row-major bin indices with per-feature thresholds. A value goes to bin
/// `b` when it lies between `thresholds[f][b-1]` (exclusive) and
/// `thresholds[f][b]` (inclusive), so "bin ≤ b" is exactly "x ≤ thresholds[f][b]".
#[derive(Debug, Clone)]
pub struct Binned {
    pub n: usize,
    pub d: usize,
    pub bins: Vec<u16>,
    /// Per feature, the midpoints between adjacent bins (`n_bins - 1` each).
    pub thresholds: Vec<Vec<f64>>,
    /// Start of each feature's bins in a flat histogram.
    pub offsets: Vec<usize>,
    pub total_bins: usize,
}

impl Binned {
    pub fn n_bins(&self, f: usize) -> usize {
        self.thresholds[f].len() + 1
    }

    #[inline]
    pub fn bin(&self, row: usize, f: usize) -> usize {
        self.bins[row * self.d + f] as usize
    }
}

/// Bin every column of `x` into at most `max_bins` bins. Columns with few
/// distinct values get one bin per value; otherwise adjacent distinct values
/// are grouped into bins of roughly equal row count. Thresholds are always
/// midpoints between adjacent distinct observed values.
pub fn bin_features(x: &Matrix, max_bins: usize) -> Binned {
    let (n, d) = (x.rows(), x.cols());
    let max_bins = max_bins.clamp(2, EXACT_BINS);
    let mut thresholds = Vec::with_capacity(d);
    let mut bins = vec![0u16; n * d];
    for f in 0..d {
        let mut vals = x.column(f);
        vals.sort_by(f64::total_cmp);
        let mut distinct: Vec<(f64, usize)> = Vec::new();
        for v in vals {
            match distinct.last_mut() {
                Some((last, c)) if *last == v => *c += 1,
                _ => distinct.push((v, 1)),
            }
        }
        let th = if distinct.len() <= max_bins {
            distinct.windows(2).map(|w| 0.5 * (w[0].0 + w[1].0)).collect::<Vec<f64>>()
        } else {
            let mut th = Vec::with_capacity(max_bins - 1);
            let mut cum = 0usize;
            for i in 0..distinct.len() - 1 {
                cum += distinct[i].1;
                let next_cut = (th.len() + 1) * n / max_bins;
                if cum >= next_cut && th.len() < max_bins - 1 {
                    th.push(0.5 * (distinct[i].0 + distinct[i + 1].0));
                }
            }
            th
        };
        for i in 0..n {
            let v = x.get(i, f);
            bins[i * d + f] = th.partition_point(|&t| t < v) as u16;
        }
        thresholds.push(th);
    }
    let mut offsets = Vec::with_capacity(d);
    let mut total = 0;
    for th in &thresholds {
        offsets.push(total);
        total += th.len() + 1;
    }
    Binned {
        n,
        d,
        bins,
        thresholds,
        offsets,
        total_bins: total,
    }
}
