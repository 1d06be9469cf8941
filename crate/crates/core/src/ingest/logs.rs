//! Well-log interval aggregation to per-well features.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Logging resolution; shorter intervals cannot be resolved.
pub const LOG_RESOLUTION_M: f64 = 0.3;

/// One interpreted well-log interval (depths in meters).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogInterval {
    pub top: f64,
    pub bottom: f64,
    pub porosity: Option<f64>,
    pub permeability: Option<f64>,
    pub clay: Option<f64>,
    pub oil_saturation: Option<f64>,
    pub pay: bool,
}

impl LogInterval {
    pub fn new(top: f64, bottom: f64, pay: bool) -> Result<Self> {
        if !(bottom > top) {
            return Err(Error::invalid(format!(
                "log interval bottom {bottom} must be below top {top}"
            )));
        }
        if bottom - top < LOG_RESOLUTION_M - 1e-9 {
            return Err(Error::invalid(format!(
                "log interval {top}..{bottom} is thinner than the {LOG_RESOLUTION_M} m resolution"
            )));
        }
        Ok(LogInterval {
            top,
            bottom,
            porosity: None,
            permeability: None,
            clay: None,
            oil_saturation: None,
            pay,
        })
    }

    pub fn with_properties(
        mut self,
        porosity: Option<f64>,
        permeability: Option<f64>,
        clay: Option<f64>,
        oil_saturation: Option<f64>,
    ) -> Self {
        self.porosity = porosity;
        self.permeability = permeability;
        self.clay = clay;
        self.oil_saturation = oil_saturation;
        self
    }

    pub fn thickness(&self) -> f64 {
        self.bottom - self.top
    }

    fn overlap(&self, top: f64, bottom: f64) -> f64 {
        (self.bottom.min(bottom) - self.top.max(top)).max(0.0)
    }
}

/// Mean and median of one property over one scope.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Summary {
    pub mean: Option<f64>,
    pub median: Option<f64>,
}

/// Aggregates over one depth scope (perforation window or whole layer).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ScopeFeatures {
    pub porosity: Summary,
    pub permeability: Summary,
    pub clay: Summary,
    pub oil_saturation: Summary,
    pub kh_median: Option<f64>,
    pub ntg: Option<f64>,
    pub stratification: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct WellLogFeatures {
    pub perforation: ScopeFeatures,
    pub layer: ScopeFeatures,
}

impl WellLogFeatures {
    /// Flattened `(column name, value)` pairs in a fixed order.
    pub fn named_values(&self) -> Vec<(String, Option<f64>)> {
        let mut out = Vec::with_capacity(22);
        for (suffix, s) in [("perf", &self.perforation), ("layer", &self.layer)] {
            for (prop, sum) in [
                ("porosity", s.porosity),
                ("permeability", s.permeability),
                ("clay", s.clay),
                ("oil_saturation", s.oil_saturation),
            ] {
                out.push((format!("{prop}_mean_{suffix}"), sum.mean));
                out.push((format!("{prop}_median_{suffix}"), sum.median));
            }
            out.push((format!("kh_median_{suffix}"), s.kh_median));
            out.push((format!("ntg_{suffix}"), s.ntg));
            out.push((format!("stratification_{suffix}"), s.stratification));
        }
        out
    }

    pub fn column_names() -> Vec<String> {
        WellLogFeatures::default()
            .named_values()
            .into_iter()
            .map(|(n, _)| n)
            .collect()
    }
}

/// Aggregate a layer's log intervals into perforation- and layer-scoped
/// features. Intervals are weighted by the thickness they contribute to the
/// scope (clipped to the perforation window for the perforation scope).
pub fn aggregate_well_logs(
    intervals: &[LogInterval],
    perf_top: f64,
    perf_bottom: f64,
) -> Result<WellLogFeatures> {
    if intervals.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !(perf_bottom > perf_top) {
        return Err(Error::invalid(format!(
            "perforation bottom {perf_bottom} must be below top {perf_top}"
        )));
    }
    let mut sorted: Vec<&LogInterval> = intervals.iter().collect();
    sorted.sort_by(|a, b| a.top.total_cmp(&b.top));

    let layer: Vec<(&LogInterval, f64)> = sorted.iter().map(|iv| (*iv, iv.thickness())).collect();
    let perf: Vec<(&LogInterval, f64)> = sorted
        .iter()
        .map(|iv| (*iv, iv.overlap(perf_top, perf_bottom)))
        .filter(|&(_, w)| w > 0.0)
        .collect();

    Ok(WellLogFeatures {
        perforation: scope_features(&perf),
        layer: scope_features(&layer),
    })
}

fn scope_features(scope: &[(&LogInterval, f64)]) -> ScopeFeatures {
    if scope.is_empty() {
        return ScopeFeatures::default();
    }
    let summary = |f: fn(&LogInterval) -> Option<f64>| {
        let pairs: Vec<(f64, f64)> = scope
            .iter()
            .filter_map(|&(iv, w)| f(iv).map(|v| (v, w)))
            .collect();
        Summary {
            mean: weighted_mean(&pairs),
            median: weighted_median(&pairs),
        }
    };
    let kh: Vec<(f64, f64)> = scope
        .iter()
        .filter_map(|&(iv, w)| iv.permeability.map(|k| (k * w, w)))
        .collect();
    let total: f64 = scope.iter().map(|&(_, w)| w).sum();
    let pay: f64 = scope.iter().filter(|(iv, _)| iv.pay).map(|&(_, w)| w).sum();
    let mut runs = 0usize;
    let mut in_run = false;
    for (iv, _) in scope {
        if !iv.pay && !in_run {
            runs += 1;
        }
        in_run = !iv.pay;
    }
    ScopeFeatures {
        porosity: summary(|iv| iv.porosity),
        permeability: summary(|iv| iv.permeability),
        clay: summary(|iv| iv.clay),
        oil_saturation: summary(|iv| iv.oil_saturation),
        kh_median: weighted_median(&kh),
        ntg: Some(pay / total),
        stratification: Some(runs as f64),
    }
}

fn weighted_mean(pairs: &[(f64, f64)]) -> Option<f64> {
    let w: f64 = pairs.iter().map(|p| p.1).sum();
    (w > 0.0).then(|| pairs.iter().map(|(v, w)| v * w).sum::<f64>() / w)
}

/// Weighted median; when the cumulative weight lands exactly on one half,
/// the two straddling values are averaged (plain median for equal weights).
pub(crate) fn weighted_median(pairs: &[(f64, f64)]) -> Option<f64> {
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    if !(total > 0.0) {
        return None;
    }
    let mut sorted = pairs.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let half = 0.5 * total;
    let mut acc = 0.0;
    for (i, &(v, w)) in sorted.iter().enumerate() {
        acc += w;
        if (acc - half).abs() <= 1e-12 * total && i + 1 < sorted.len() {
            return Some(0.5 * (v + sorted[i + 1].0));
        }
        if acc > half {
            return Some(v);
        }
    }
    sorted.last().map(|p| p.0)
}
