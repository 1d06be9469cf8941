//! Monthly production reports to cumulative production targets.

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Window lengths, in calendar months after the frac month.
pub const WINDOWS: [usize; 3] = [3, 6, 12];
/// Months before the frac month averaged into pre-frac rates.
pub const PRE_FRAC_MONTHS: i64 = 3;
/// Name of the regression target column.
pub const TARGET_COLUMN: &str = "oil_cum_3m";

/// One month of a monthly production report. `month` counts calendar months
/// since 1970-01.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonthlyRecord {
    pub month: i64,
    pub oil: Option<f64>,
    pub fluid: Option<f64>,
    pub gas: Option<f64>,
    pub watercut: Option<f64>,
    pub hours: Option<f64>,
}

impl MonthlyRecord {
    pub fn new(month: i64) -> Self {
        MonthlyRecord {
            month,
            oil: None,
            fluid: None,
            gas: None,
            watercut: None,
            hours: None,
        }
    }
}

/// Months since 1970-01 for a calendar year and month (1-based).
pub fn month_index(year: i32, month: u32) -> i64 {
    (year as i64 - 1970) * 12 + (month as i64 - 1)
}

/// Month index containing a date given as days since 1970-01-01.
pub fn month_of_day(days: i64) -> Result<i64> {
    let date = day_to_date(days)?;
    Ok(month_index(date.year(), date.month()))
}

pub fn day_to_date(days: i64) -> Result<NaiveDate> {
    NaiveDate::from_ymd_opt(1970, 1, 1)
        .and_then(|e| e.checked_add_signed(chrono::Duration::days(days)))
        .ok_or_else(|| Error::Parse(format!("day {days} out of range")))
}

/// Days since 1970-01-01 of an ISO `YYYY-MM-DD` date.
pub fn parse_date(text: &str) -> Result<i64> {
    let d = NaiveDate::parse_from_str(text.trim(), "%Y-%m-%d")
        .map_err(|e| Error::Parse(format!("date `{text}`: {e}")))?;
    Ok((d - NaiveDate::from_ymd_opt(1970, 1, 1).unwrap()).num_days())
}

pub fn format_date(days: i64) -> String {
    day_to_date(days)
        .map(|d| d.format("%Y-%m-%d").to_string())
        .unwrap_or_else(|_| days.to_string())
}

/// Month index of a `YYYY-MM` label.
pub fn parse_month(text: &str) -> Result<i64> {
    let bad = || Error::Parse(format!("month `{text}`"));
    let (y, m) = text.trim().split_once('-').ok_or_else(bad)?;
    let y: i32 = y.parse().map_err(|_| bad())?;
    let m: u32 = m.parse().map_err(|_| bad())?;
    if !(1..=12).contains(&m) {
        return Err(bad());
    }
    Ok(month_index(y, m))
}

pub fn format_month(month: i64) -> String {
    format!("{:04}-{:02}", 1970 + month.div_euclid(12), month.rem_euclid(12) + 1)
}

/// Cumulative and mean production around one fracturing operation.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ProductionRecord {
    /// Indexed like [`WINDOWS`].
    pub oil_cum: [Option<f64>; 3],
    pub fluid_cum: [Option<f64>; 3],
    pub gas_cum: [Option<f64>; 3],
    pub watercut_mean: [Option<f64>; 3],
    pub hours_total: [Option<f64>; 3],
    pub pre_frac_oil: Option<f64>,
    pub pre_frac_fluid: Option<f64>,
    pub pre_frac_watercut: Option<f64>,
}

impl ProductionRecord {
    /// Flattened `(column name, value)` pairs in a fixed order.
    pub fn named_values(&self) -> Vec<(String, Option<f64>)> {
        let mut out = Vec::with_capacity(18);
        for (name, vals) in [
            ("oil_cum", &self.oil_cum),
            ("fluid_cum", &self.fluid_cum),
            ("gas_cum", &self.gas_cum),
            ("watercut_mean", &self.watercut_mean),
            ("hours_total", &self.hours_total),
        ] {
            for (w, v) in WINDOWS.iter().zip(vals) {
                out.push((format!("{name}_{w}m"), *v));
            }
        }
        out.push(("pre_frac_oil".into(), self.pre_frac_oil));
        out.push(("pre_frac_fluid".into(), self.pre_frac_fluid));
        out.push(("pre_frac_watercut".into(), self.pre_frac_watercut));
        out
    }

    pub fn column_names() -> Vec<String> {
        ProductionRecord::default()
            .named_values()
            .into_iter()
            .map(|(n, _)| n)
            .collect()
    }
}

/// Compute windowed production figures for an operation dated `frac_day`.
///
/// A window of `w` months covers the `w` calendar months after the frac
/// month. Cumulative sums need a report for every month of the window and an
/// observed value in each; otherwise the figure is missing. Watercut is
/// averaged and hours are summed over the observed months of a complete
/// window. Pre-frac figures average the up to three months preceding the
/// frac month.
pub fn compute_production_targets(records: &[MonthlyRecord], frac_day: i64) -> Result<ProductionRecord> {
    if records.windows(2).any(|w| w[0].month > w[1].month) {
        return Err(Error::invalid("monthly records must be sorted by month"));
    }
    let frac_month = month_of_day(frac_day)?;
    let mut out = ProductionRecord::default();
    for (wi, &w) in WINDOWS.iter().enumerate() {
        let lo = frac_month + 1;
        let hi = frac_month + w as i64;
        let window: Vec<&MonthlyRecord> = records
            .iter()
            .filter(|r| r.month >= lo && r.month <= hi)
            .collect();
        let complete = (lo..=hi).all(|m| window.iter().any(|r| r.month == m));
        if !complete {
            continue;
        }
        out.oil_cum[wi] = full_sum(window.iter().map(|r| r.oil), w);
        out.fluid_cum[wi] = full_sum(window.iter().map(|r| r.fluid), w);
        out.gas_cum[wi] = full_sum(window.iter().map(|r| r.gas), w);
        out.watercut_mean[wi] = mean(window.iter().filter_map(|r| r.watercut));
        let hours: Vec<f64> = window.iter().filter_map(|r| r.hours).collect();
        out.hours_total[wi] = (!hours.is_empty()).then(|| hours.iter().sum());
    }
    let pre: Vec<&MonthlyRecord> = records
        .iter()
        .filter(|r| r.month < frac_month && r.month >= frac_month - PRE_FRAC_MONTHS)
        .collect();
    out.pre_frac_oil = mean(pre.iter().filter_map(|r| r.oil));
    out.pre_frac_fluid = mean(pre.iter().filter_map(|r| r.fluid));
    out.pre_frac_watercut = mean(pre.iter().filter_map(|r| r.watercut));
    Ok(out)
}

/// Sum over a window when it holds `expected` distinct months with values.
fn full_sum(values: impl Iterator<Item = Option<f64>>, expected: usize) -> Option<f64> {
    let v: Vec<Option<f64>> = values.collect();
    if v.len() < expected || v.iter().any(Option::is_none) {
        return None;
    }
    Some(v.into_iter().flatten().sum())
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (mut s, mut n) = (0.0, 0usize);
    for v in values {
        s += v;
        n += 1;
    }
    (n > 0).then(|| s / n as f64)
}
