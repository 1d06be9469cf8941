use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::regress::Predictor;
use crate::table::{ColumnGroup, FieldTable};

/// Default relative perturbation.
pub const OVAT_DELTA: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TornadoEntry {
    pub feature: String,
    pub baseline: f64,
    /// Prediction with the feature at `(1 - delta) * mean`.
    pub low: f64,
    /// Prediction with the feature at `(1 + delta) * mean`.
    pub high: f64,
    pub delta: f64,
}

impl TornadoEntry {
    pub fn swing(&self) -> f64 {
        (self.low - self.baseline).abs().max((self.high - self.baseline).abs())
    }
}

pub fn column_means(x: &Matrix) -> Vec<f64> {
    let n = x.rows() as f64;
    let mut m = vec![0.0; x.cols()];
    for i in 0..x.rows() {
        for (a, v) in m.iter_mut().zip(x.row(i)) {
            *a += v;
        }
    }
    m.iter_mut().for_each(|a| *a /= n);
    m
}

/// Positions in `features` of columns that belong to the design group of `table`.
pub fn design_features(table: &FieldTable, features: &[String]) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for (j, name) in features.iter().enumerate() {
        if table.column(name)?.meta.group == ColumnGroup::Design {
            out.push(j);
        }
    }
    Ok(out)
}

/// One-at-a-time sensitivity around the all-means row of `x`. Entries are
/// sorted by their larger swing, ties by position in `which`.
pub fn ovat_tornado<P: Predictor + ?Sized>(
    model: &P,
    x: &Matrix,
    features: &[String],
    which: &[usize],
    delta: f64,
) -> Result<Vec<TornadoEntry>> {
    if !(delta > 0.0) {
        return Err(Error::invalid(format!("OVAT delta must be positive, got {delta}")));
    }
    if x.rows() == 0 {
        return Err(Error::EmptyInput);
    }
    if features.len() != x.cols() {
        return Err(Error::invalid(format!("{} feature names for {} columns", features.len(), x.cols())));
    }
    if let Some(&j) = which.iter().find(|&&j| j >= x.cols()) {
        return Err(Error::invalid(format!("feature position {j} out of range")));
    }
    let means = column_means(x);
    let baseline = model.predict_row(&means);
    let mut row = means.clone();
    let mut at = |j: usize, v: f64| {
        row[j] = v;
        let p = model.predict_row(&row);
        row[j] = means[j];
        p
    };
    let mut out: Vec<TornadoEntry> = which
        .iter()
        .map(|&j| TornadoEntry {
            feature: features[j].clone(),
            baseline,
            low: at(j, (1.0 - delta) * means[j]),
            high: at(j, (1.0 + delta) * means[j]),
            delta,
        })
        .collect();
    out.sort_by(|a, b| b.swing().total_cmp(&a.swing()));
    Ok(out)
}
