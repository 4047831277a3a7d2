//! Mapping instances onto distribution characteristics.
//!
//! Each instance (one row of a project's metric matrix, whatever its
//! width) is summarized by the same 16 descriptive statistics of its
//! preprocessed feature values. Projects with unrelated metric sets thus
//! end up in one shared 16-column space.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::corpus::Project;
use crate::error::{Error, Result};
use crate::preprocess::{self, PreprocessConfig};

pub const INDICATOR_COUNT: usize = 16;

/// The distribution indicators, in canonical column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Indicator {
    Min,
    Max,
    Range,
    Sum,
    Mean,
    Median,
    Mode,
    FirstQuartile,
    ThirdQuartile,
    InterquartileRange,
    Variance,
    StdDev,
    MeanAbsDeviation,
    Skewness,
    Kurtosis,
    VariationRatio,
}

impl Indicator {
    pub const ALL: [Indicator; INDICATOR_COUNT] = [
        Indicator::Min,
        Indicator::Max,
        Indicator::Range,
        Indicator::Sum,
        Indicator::Mean,
        Indicator::Median,
        Indicator::Mode,
        Indicator::FirstQuartile,
        Indicator::ThirdQuartile,
        Indicator::InterquartileRange,
        Indicator::Variance,
        Indicator::StdDev,
        Indicator::MeanAbsDeviation,
        Indicator::Skewness,
        Indicator::Kurtosis,
        Indicator::VariationRatio,
    ];

    pub fn name(self) -> &'static str {
        INDICATOR_NAMES[self as usize]
    }
}

/// Stable indicator names, used as feature names of profiled projects.
pub const INDICATOR_NAMES: [&str; INDICATOR_COUNT] = [
    "min",
    "max",
    "range",
    "sum",
    "mean",
    "median",
    "mode",
    "first_quartile",
    "third_quartile",
    "interquartile_range",
    "variance",
    "std_dev",
    "mean_abs_deviation",
    "skewness",
    "kurtosis",
    "variation_ratio",
];

pub fn indicator_names() -> Vec<String> {
    INDICATOR_NAMES.iter().map(|s| s.to_string()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicVector {
    pub values: [f64; INDICATOR_COUNT],
}

impl CharacteristicVector {
    pub fn get(&self, indicator: Indicator) -> f64 {
        self.values[indicator as usize]
    }

    pub fn indicator_names(&self) -> &'static [&'static str; INDICATOR_COUNT] {
        &INDICATOR_NAMES
    }
}

/// Linear interpolation between order statistics at `p·(n−1)` (0-based),
/// i.e. the "type 7" rule. `sorted` must be ascending and non-empty.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = p * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Most frequent value after rounding to 4 decimals; ties go to the
/// smallest bucket. Returns (smallest original value in the modal bucket,
/// bucket size).
fn mode_sorted(sorted: &[f64]) -> (f64, usize) {
    let mut buckets: BTreeMap<i64, (f64, usize)> = BTreeMap::new();
    for &v in sorted {
        let key = (v * 1e4).round() as i64;
        let entry = buckets.entry(key).or_insert((v, 0));
        entry.1 += 1;
    }
    let mut best = (sorted[0], 0usize);
    // BTreeMap iterates ascending; strict > keeps the smallest on ties.
    for (_, (value, count)) in buckets {
        if count > best.1 {
            best = (value, count);
        }
    }
    best
}

/// Summarize one instance by the 16 indicators. Values are sorted before
/// any arithmetic, so the result is bitwise independent of input order.
pub fn characterize_instance(values: &[f64]) -> Result<CharacteristicVector> {
    if values.is_empty() {
        return Err(Error::EmptyInstance);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;

    let min = sorted[0];
    let max = sorted[sorted.len() - 1];
    let sum: f64 = sorted.iter().sum();
    let (mode, mode_count) = mode_sorted(&sorted);
    let variation_ratio = 1.0 - mode_count as f64 / n;

    let mut out = [0.0; INDICATOR_COUNT];
    out[Indicator::Min as usize] = min;
    out[Indicator::Max as usize] = max;
    out[Indicator::Sum as usize] = sum;
    out[Indicator::Mode as usize] = mode;
    out[Indicator::VariationRatio as usize] = variation_ratio;

    if min == max {
        // Degenerate distribution: every location statistic is the value
        // itself and every spread/shape statistic is zero.
        for ind in [
            Indicator::Mean,
            Indicator::Median,
            Indicator::FirstQuartile,
            Indicator::ThirdQuartile,
        ] {
            out[ind as usize] = min;
        }
        return Ok(CharacteristicVector { values: out });
    }

    let mean = sum / n;
    let median = quantile_sorted(&sorted, 0.5);
    let q1 = quantile_sorted(&sorted, 0.25);
    let q3 = quantile_sorted(&sorted, 0.75);
    let ss: f64 = sorted.iter().map(|x| (x - mean).powi(2)).sum();
    let variance = if sorted.len() > 1 { ss / (n - 1.0) } else { 0.0 };
    let mad = sorted.iter().map(|x| (x - mean).abs()).sum::<f64>() / n;
    let sd_pop = (ss / n).sqrt();
    let (skewness, kurtosis) = if sd_pop < 1e-12 {
        (0.0, 0.0)
    } else {
        let (s3, s4) = sorted.iter().fold((0.0, 0.0), |(a, b), x| {
            let z = (x - mean) / sd_pop;
            (a + z.powi(3), b + z.powi(4))
        });
        (s3 / n, s4 / n - 3.0)
    };

    out[Indicator::Range as usize] = max - min;
    out[Indicator::Mean as usize] = mean;
    out[Indicator::Median as usize] = median;
    out[Indicator::FirstQuartile as usize] = q1;
    out[Indicator::ThirdQuartile as usize] = q3;
    out[Indicator::InterquartileRange as usize] = q3 - q1;
    out[Indicator::Variance as usize] = variance;
    out[Indicator::StdDev as usize] = variance.sqrt();
    out[Indicator::MeanAbsDeviation as usize] = mad;
    out[Indicator::Skewness as usize] = skewness;
    out[Indicator::Kurtosis as usize] = kurtosis;
    Ok(CharacteristicVector { values: out })
}

/// A project re-expressed in the 16-indicator space.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfiledProject {
    pub source_name: String,
    pub source_family: String,
    pub matrix: DMatrix<f64>,
    pub labels: Vec<bool>,
}

impl ProfiledProject {
    pub fn feature_names(&self) -> Vec<String> {
        indicator_names()
    }
}

/// Preprocess `project` per `config`, then map every instance.
pub fn characterize_project(
    project: &Project,
    config: &PreprocessConfig,
) -> Result<ProfiledProject> {
    let prepared = preprocess::apply(project.matrix(), config)?;
    let m = prepared.nrows();
    let mut matrix = DMatrix::zeros(m, INDICATOR_COUNT);
    let mut row_buf = Vec::with_capacity(prepared.ncols());
    for i in 0..m {
        row_buf.clear();
        row_buf.extend(prepared.row(i).iter().copied());
        let v = characterize_instance(&row_buf)?;
        for (j, value) in v.values.iter().enumerate() {
            matrix[(i, j)] = *value;
        }
    }
    Ok(ProfiledProject {
        source_name: project.name().to_string(),
        source_family: project.dataset_family().to_string(),
        matrix,
        labels: project.labels().to_vec(),
    })
}
