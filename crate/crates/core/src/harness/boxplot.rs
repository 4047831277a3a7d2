use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::quantile_sorted;

/// Standardized box-plot numbers of one group. `min`/`max` are the whisker
/// ends, i.e. the most extreme values inside the 1.5·IQR fences; values
/// beyond the fences are listed in `outliers`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxplotSummary {
    pub group: String,
    pub count: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub outliers: Vec<f64>,
}

pub fn summarize_group(group: &str, values: &[f64]) -> Result<BoxplotSummary> {
    if values.is_empty() {
        return Err(Error::Config(format!("box plot group `{group}` is empty")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q1 = quantile_sorted(&sorted, 0.25);
    let median = quantile_sorted(&sorted, 0.5);
    let q3 = quantile_sorted(&sorted, 0.75);
    let iqr = q3 - q1;
    let (lo, hi) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
    let inside: Vec<f64> = sorted.iter().copied().filter(|v| (lo..=hi).contains(v)).collect();
    let outliers = sorted.iter().copied().filter(|v| !(lo..=hi).contains(v)).collect();
    Ok(BoxplotSummary {
        group: group.to_string(),
        count: sorted.len(),
        min: inside[0],
        q1,
        median,
        q3,
        max: inside[inside.len() - 1],
        outliers,
    })
}

pub fn emit_boxplot_summary(groups: &[(String, Vec<f64>)]) -> Result<Vec<BoxplotSummary>> {
    groups
        .iter()
        .map(|(name, values)| summarize_group(name, values))
        .collect()
}
