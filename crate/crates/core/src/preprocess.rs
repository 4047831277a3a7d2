//! Per-project preprocessing: optional `ln(x + 1)` filter and per-feature
//! z-score normalization. Every project is normalized with its own
//! statistics.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreprocessConfig {
    #[serde(default)]
    pub log_filter: bool,
    /// Skipping normalization is only useful for degenerate single-row
    /// projects and for tests.
    #[serde(default = "default_true")]
    pub normalize: bool,
}

fn default_true() -> bool {
    true
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            log_filter: false,
            normalize: true,
        }
    }
}

/// Column means and sample standard deviations used by [`zscore`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationStats {
    pub means: Vec<f64>,
    pub std_devs: Vec<f64>,
}

pub fn log_filter(matrix: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    for (col, column) in matrix.column_iter().enumerate() {
        if let Some(row) = column.iter().position(|&v| v < 0.0) {
            return Err(Error::NegativeLogInput { row, col });
        }
    }
    Ok(matrix.map(f64::ln_1p))
}

/// Standardize every column to mean 0 and sample sd 1. Constant columns
/// become all zeros and record `sd = 0`.
pub fn zscore(matrix: &DMatrix<f64>) -> Result<(DMatrix<f64>, NormalizationStats)> {
    let m = matrix.nrows();
    if m < 2 {
        return Err(Error::InsufficientRows(m));
    }
    let mut out = DMatrix::zeros(m, matrix.ncols());
    let mut means = Vec::with_capacity(matrix.ncols());
    let mut std_devs = Vec::with_capacity(matrix.ncols());
    for (j, column) in matrix.column_iter().enumerate() {
        let mean = column.iter().sum::<f64>() / m as f64;
        let ss: f64 = column.iter().map(|v| (v - mean).powi(2)).sum();
        let sd = (ss / (m - 1) as f64).sqrt();
        // Spread at rounding-noise level counts as constant.
        let constant = sd <= 1e-12 * mean.abs().max(1.0);
        for (i, v) in column.iter().enumerate() {
            out[(i, j)] = if constant { 0.0 } else { (v - mean) / sd };
        }
        means.push(mean);
        std_devs.push(if constant { 0.0 } else { sd });
    }
    Ok((out, NormalizationStats { means, std_devs }))
}

/// Apply the configured steps in order: log filter, then z-score.
pub fn apply(matrix: &DMatrix<f64>, config: &PreprocessConfig) -> Result<DMatrix<f64>> {
    let filtered = if config.log_filter {
        log_filter(matrix)?
    } else {
        matrix.clone()
    };
    if config.normalize {
        Ok(zscore(&filtered)?.0)
    } else {
        Ok(filtered)
    }
}
