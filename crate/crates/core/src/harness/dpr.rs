//! Defect-proportion-ratio analysis of a finished run.
//!
//! Only dataset summaries are consulted here, never instance labels.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::DatasetSummary;
use crate::error::Result;
use crate::predictors::Method;
use crate::stats::{dpr, pearson};

use super::{select_best, ResultRow};

/// Below this DPR the hybrid model tends to help most.
pub const LOW_DPR_THRESHOLD: f64 = 0.64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DprRow {
    pub target: String,
    pub pure_source: Option<String>,
    pub pure_dpr: Option<f64>,
    pub pure_f_measure: Option<f64>,
    pub mix_f_measure: Option<f64>,
    /// f(mix) − f(cpdp_pure)
    pub improvement: Option<f64>,
    /// pure_dpr < 0.64 (strict)
    pub low_dpr: bool,
    /// Correlation between DPR and f-measure over the target's `ifs_our`
    /// candidate sources.
    pub pearson_r: Option<f64>,
    pub pearson_p: Option<f64>,
    pub notes: String,
}

fn lookup_dpr(summaries: &BTreeMap<String, DatasetSummary>, source: &str, target: &str) -> Option<f64> {
    dpr(summaries.get(source)?, summaries.get(target)?).ok()
}

pub fn analyze_dpr(
    results: &[ResultRow],
    summaries: &BTreeMap<String, DatasetSummary>,
) -> Result<Vec<DprRow>> {
    let best = select_best(results);
    let mut targets: Vec<&str> = Vec::new();
    for r in results {
        if !targets.contains(&r.target.as_str()) {
            targets.push(&r.target);
        }
    }

    let mut rows = Vec::new();
    for target in targets {
        let mut notes = Vec::new();
        let pure = best.iter().find(|b| b.target == target && b.method == Method::CpdpPure);
        let mix = best.iter().find(|b| b.target == target && b.method == Method::Mix);
        if pure.is_none() {
            notes.push("no cpdp_pure result");
        }
        if mix.is_none() {
            notes.push("no mix result");
        }
        let pure_dpr = pure.and_then(|p| lookup_dpr(summaries, &p.source, target));
        if pure.is_some() && pure_dpr.is_none() {
            notes.push("dpr undefined");
        }
        let improvement = match (pure, mix) {
            (Some(p), Some(m)) => Some(m.f_measure - p.f_measure),
            _ => None,
        };

        let (xs, ys): (Vec<f64>, Vec<f64>) = results
            .iter()
            .filter(|r| r.target == target && r.method == Method::IfsOur)
            .filter_map(|r| Some((lookup_dpr(summaries, &r.source, target)?, r.f_measure)))
            .unzip();
        let (pearson_r, pearson_p) = match pearson(&xs, &ys) {
            Ok((r, p)) => (Some(r), Some(p)),
            Err(_) => {
                notes.push("correlation undefined");
                (None, None)
            }
        };

        rows.push(DprRow {
            target: target.to_string(),
            pure_source: pure.map(|p| p.source.clone()),
            pure_dpr,
            pure_f_measure: pure.map(|p| p.f_measure),
            mix_f_measure: mix.map(|m| m.f_measure),
            improvement,
            low_dpr: pure_dpr.is_some_and(|d| d < LOW_DPR_THRESHOLD),
            pearson_r,
            pearson_p,
            notes: notes.join("; "),
        });
    }
    Ok(rows)
}
