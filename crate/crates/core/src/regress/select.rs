//! Choosing between fitted model families by held-out test score.

use serde::{Deserialize, Serialize};

use super::cv::CvReport;
use super::metrics::r2_score;
use crate::error::{Error, Result};

pub const ENSEMBLE_NAME: &str = "ensemble";
pub const ENSEMBLE_SIZE: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub chosen: String,
    pub best_single: String,
    pub best_single_r2: f64,
    /// Members of the averaging ensemble, best first; empty with one candidate.
    pub ensemble_members: Vec<String>,
    pub ensemble_r2: Option<f64>,
}

/// Pick the candidate with the highest held-out test R² (ties go to the
/// name that sorts first). The mean prediction of the top candidates is
/// chosen instead only when it scores strictly higher.
pub fn select_model(candidates: &[(String, CvReport)]) -> Result<Selection> {
    if candidates.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| {
        candidates[b].1.test_r2
            .total_cmp(&candidates[a].1.test_r2)
            .then_with(|| candidates[a].0.cmp(&candidates[b].0))
    });
    let best = &candidates[order[0]];
    let mut sel = Selection {
        chosen: best.0.clone(),
        best_single: best.0.clone(),
        best_single_r2: best.1.test_r2,
        ensemble_members: Vec::new(),
        ensemble_r2: None,
    };
    if candidates.len() < 2 {
        return Ok(sel);
    }
    let top: Vec<&(String, CvReport)> = order.iter().take(ENSEMBLE_SIZE).map(|&i| &candidates[i]).collect();
    let y = &best.1.test_y;
    if top.iter().any(|c| c.1.test_y != *y || c.1.test_predictions.len() != y.len()) {
        return Err(Error::invalid("candidates were scored on different test sets"));
    }
    let avg: Vec<f64> = (0..y.len())
        .map(|i| top.iter().map(|c| c.1.test_predictions[i]).sum::<f64>() / top.len() as f64)
        .collect();
    let r2 = r2_score(y, &avg)?;
    sel.ensemble_members = top.iter().map(|c| c.0.clone()).collect();
    sel.ensemble_r2 = Some(r2);
    if r2 > sel.best_single_r2 {
        sel.chosen = ENSEMBLE_NAME.to_string();
    }
    Ok(sel)
}
