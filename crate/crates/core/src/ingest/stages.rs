//! Consolidation of per-stage frac-list rows into one operation record.

use crate::error::{Error, Result};
use crate::table::RowKey;

/// Column holding the number of stages of a consolidated operation.
pub const STAGE_COUNT_COLUMN: &str = "n_stages";

/// How a numeric design field combines across stages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageRule {
    Sum,
    Mean,
}

/// Fluid volumes, proppant masses, breaker amounts and fracture geometry
/// add up over stages; every other numeric field is averaged.
pub fn stage_rule(field: &str) -> StageRule {
    const SUMMED: [&str; 6] = [
        "volume",
        "mass",
        "breaker",
        "frac_width",
        "frac_length",
        "frac_height",
    ];
    let f = field.to_ascii_lowercase();
    if SUMMED.iter().any(|p| f.contains(p)) {
        StageRule::Sum
    } else {
        StageRule::Mean
    }
}

/// Categorical fields recorded separately for every stage.
pub fn is_per_stage_category(field: &str) -> bool {
    field.to_ascii_lowercase().contains("proppant")
}

/// Name of the stage-indexed column for a per-stage categorical field.
pub fn stage_column(field: &str, stage_position: usize) -> String {
    format!("{field}_s{stage_position}")
}

/// Column layout shared by every stage row of a frac list.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StageLayout {
    pub numeric: Vec<String>,
    pub categorical: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageRecord {
    pub key: RowKey,
    pub stage: i64,
    /// Aligned with [`StageLayout::numeric`].
    pub numeric: Vec<Option<f64>>,
    /// Aligned with [`StageLayout::categorical`].
    pub categorical: Vec<Option<String>>,
}

impl StageRecord {
    pub fn missing_cells(&self) -> usize {
        self.numeric.iter().filter(|v| v.is_none()).count()
            + self.categorical.iter().filter(|v| v.is_none()).count()
    }
}

/// One consolidated fracturing operation.
#[derive(Debug, Clone, PartialEq)]
pub struct OperationRecord {
    pub key: RowKey,
    pub n_stages: usize,
    /// Aligned with [`StageLayout::numeric`].
    pub numeric: Vec<Option<f64>>,
    /// Non-per-stage categorical fields, as `(field, value)`.
    pub categorical: Vec<(String, Option<String>)>,
    /// Per-stage categorical fields: `(field, values in stage order)`.
    pub per_stage: Vec<(String, Vec<Option<String>>)>,
}

/// Merge the stage rows of one operation: summed fields add over observed
/// stage values, other numeric fields average over observed values,
/// non-per-stage categoricals take the most frequent observed value (first
/// occurrence wins ties), and per-stage categoricals keep stage order.
pub fn consolidate_stages(layout: &StageLayout, stages: &[StageRecord]) -> Result<OperationRecord> {
    let first = stages.first().ok_or(Error::EmptyInput)?;
    if stages.iter().any(|s| s.key != first.key) {
        return Err(Error::InconsistentStageGroup);
    }
    let mut ordered: Vec<&StageRecord> = stages.iter().collect();
    ordered.sort_by_key(|s| s.stage);

    let numeric = layout
        .numeric
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let obs: Vec<f64> = ordered.iter().filter_map(|s| s.numeric[j]).collect();
            if obs.is_empty() {
                return None;
            }
            let sum: f64 = obs.iter().sum();
            Some(match stage_rule(name) {
                StageRule::Sum => sum,
                StageRule::Mean => sum / obs.len() as f64,
            })
        })
        .collect();

    let mut categorical = Vec::new();
    let mut per_stage = Vec::new();
    for (j, name) in layout.categorical.iter().enumerate() {
        let values: Vec<Option<String>> = ordered.iter().map(|s| s.categorical[j].clone()).collect();
        if is_per_stage_category(name) {
            per_stage.push((name.clone(), values));
        } else {
            categorical.push((name.clone(), mode(&values)));
        }
    }
    Ok(OperationRecord {
        key: first.key.clone(),
        n_stages: stages.len(),
        numeric,
        categorical,
        per_stage,
    })
}

fn mode(values: &[Option<String>]) -> Option<String> {
    let mut best: Option<(&String, usize)> = None;
    for v in values.iter().flatten() {
        let count = values.iter().flatten().filter(|w| *w == v).count();
        if best.is_none_or(|(_, c)| count > c) {
            best = Some((v, count));
        }
    }
    best.map(|(v, _)| v.clone())
}
