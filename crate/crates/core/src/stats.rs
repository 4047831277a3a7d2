//! Evaluation measures and the statistical comparison machinery:
//! precision/recall/f-measure, defect-proportion ratio, Cliff's delta,
//! the Wilcoxon signed-rank test and Pearson correlation.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use crate::corpus::DatasetSummary;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl ConfusionMatrix {
    pub fn from_predictions(actual: &[bool], predicted: &[bool]) -> Result<Self> {
        if actual.len() != predicted.len() {
            return Err(Error::LengthMismatch(actual.len(), predicted.len()));
        }
        let mut cm = ConfusionMatrix::default();
        for (&a, &p) in actual.iter().zip(predicted) {
            match (a, p) {
                (true, true) => cm.tp += 1,
                (false, true) => cm.fp += 1,
                (false, false) => cm.tn += 1,
                (true, false) => cm.fn_ += 1,
            }
        }
        Ok(cm)
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Precision, recall and f-measure; every 0/0 is taken as 0.
pub fn prf(cm: &ConfusionMatrix) -> (f64, f64, f64) {
    let precision = ratio(cm.tp as f64, (cm.tp + cm.fp) as f64);
    let recall = ratio(cm.tp as f64, (cm.tp + cm.fn_) as f64);
    let f = ratio(2.0 * precision * recall, precision + recall);
    (precision, recall, f)
}

/// Defect-proportion ratio: source defect ratio over target defect ratio.
pub fn dpr(source: &DatasetSummary, target: &DatasetSummary) -> Result<f64> {
    if target.defect_ratio <= 0.0 {
        return Err(Error::DprUndefined);
    }
    Ok(source.defect_ratio / target.defect_ratio)
}

/// Cliff's delta: P(x > y) − P(x < y) over all cross pairs.
pub fn cliffs_delta(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut dominance: i64 = 0;
    for a in x {
        for b in y {
            dominance += match a.partial_cmp(b) {
                Some(std::cmp::Ordering::Greater) => 1,
                Some(std::cmp::Ordering::Less) => -1,
                _ => 0,
            };
        }
    }
    Ok(dominance as f64 / (x.len() * y.len()) as f64)
}

/// Which p-value computation a Wilcoxon test used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WilcoxonMethod {
    /// Exact when the effective n is at most [`EXACT_CUTOFF`], normal
    /// approximation otherwise.
    Auto,
    Exact,
    Asymptotic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WilcoxonOptions {
    pub method: WilcoxonMethod,
    /// Shift |T − μ| by 0.5 toward the mean in the normal approximation.
    pub continuity_correction: bool,
}

impl Default for WilcoxonOptions {
    fn default() -> Self {
        Self {
            method: WilcoxonMethod::Auto,
            continuity_correction: true,
        }
    }
}

pub const EXACT_CUTOFF: usize = 12;
pub const ORACLE_LIMIT: usize = 15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonResult {
    pub p_value: f64,
    /// min(W+, W−)
    pub statistic: f64,
    pub cliffs_delta: f64,
    /// Pairs remaining after dropping zero differences.
    pub n_pairs: usize,
    pub method_note: String,
}

/// Differences closer than this to each other count as tied, and
/// differences within it of zero count as zero. Printed result tables
/// carry two decimals, so `0.45 − 0.37` and `0.47 − 0.39` must tie.
const TIE_SCALE: f64 = 1e9;

fn tie_key(d: f64) -> f64 {
    (d * TIE_SCALE).round()
}

/// Nonzero paired differences, snapped to the tie grid.
pub(crate) fn paired_differences(x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(Error::EmptyInput);
    }
    let diffs: Vec<f64> = x
        .iter()
        .zip(y)
        .map(|(a, b)| tie_key(a - b))
        .filter(|&k| k != 0.0)
        .collect();
    if diffs.is_empty() {
        return Err(Error::DegeneratePairing);
    }
    Ok(diffs)
}

/// Midranks of |d|, returned doubled so they are integers.
fn doubled_midranks(diffs: &[f64]) -> Vec<u64> {
    let n = diffs.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| diffs[a].abs().total_cmp(&diffs[b].abs()));
    let mut ranks = vec![0u64; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && diffs[order[j + 1]].abs() == diffs[order[i]].abs() {
            j += 1;
        }
        // positions i..=j (0-based) share rank ((i+1)+(j+1))/2
        let doubled = (i + 1 + j + 1) as u64;
        for &idx in &order[i..=j] {
            ranks[idx] = doubled;
        }
        i = j + 1;
    }
    ranks
}

/// Two-sided exact p from the sign-flip distribution of W+, by dynamic
/// programming over doubled rank sums.
fn exact_p(doubled_ranks: &[u64], t_doubled: u64) -> f64 {
    let total: u64 = doubled_ranks.iter().sum();
    let mut counts = vec![0u64; total as usize + 1];
    counts[0] = 1;
    for &r in doubled_ranks {
        let r = r as usize;
        for s in (r..counts.len()).rev() {
            counts[s] += counts[s - r];
        }
    }
    let at_or_below: u64 = counts[..=t_doubled as usize].iter().sum();
    let denom = 2f64.powi(doubled_ranks.len() as i32);
    (2.0 * at_or_below as f64 / denom).min(1.0)
}

/// Wilcoxon signed-rank test with default options (exact for n ≤ 12,
/// continuity-corrected normal approximation above).
pub fn wilcoxon_signed_rank(x: &[f64], y: &[f64]) -> Result<ComparisonResult> {
    wilcoxon_signed_rank_with(x, y, &WilcoxonOptions::default())
}

pub fn wilcoxon_signed_rank_with(
    x: &[f64],
    y: &[f64],
    options: &WilcoxonOptions,
) -> Result<ComparisonResult> {
    let diffs = paired_differences(x, y)?;
    let n = diffs.len();
    let ranks = doubled_midranks(&diffs);
    let total: u64 = ranks.iter().sum();
    let w_plus: u64 = ranks
        .iter()
        .zip(&diffs)
        .filter(|(_, d)| **d > 0.0)
        .map(|(r, _)| *r)
        .sum();
    let t_doubled = w_plus.min(total - w_plus);
    let statistic = t_doubled as f64 / 2.0;

    let use_exact = match options.method {
        WilcoxonMethod::Exact => true,
        WilcoxonMethod::Asymptotic => false,
        WilcoxonMethod::Auto => n <= EXACT_CUTOFF,
    };

    let (p_value, method_note) = if use_exact {
        // u64 counts of 2^n sign patterns
        if n > 62 {
            return Err(Error::TooManyPairs(n, 62));
        }
        (exact_p(&ranks, t_doubled), format!("exact (n={n})"))
    } else {
        let nf = n as f64;
        let mean = nf * (nf + 1.0) / 4.0;
        // tie correction: Σ(t³ − t)/48 over groups of tied |d|
        let mut sorted = ranks.clone();
        sorted.sort_unstable();
        let mut tie_term = 0.0;
        let mut i = 0;
        while i < sorted.len() {
            let j = sorted[i..].iter().take_while(|&&r| r == sorted[i]).count();
            let t = j as f64;
            tie_term += t * t * t - t;
            i += j;
        }
        let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
        let mut dev = (statistic - mean).abs();
        if options.continuity_correction {
            dev = (dev - 0.5).max(0.0);
        }
        let p = if var <= 0.0 {
            1.0
        } else {
            let z = dev / var.sqrt();
            let normal = Normal::standard();
            (2.0 * normal.cdf(-z)).min(1.0)
        };
        let cc = if options.continuity_correction {
            "with continuity correction"
        } else {
            "no continuity correction"
        };
        (p, format!("asymptotic normal, tie-corrected, {cc} (n={n})"))
    };

    Ok(ComparisonResult {
        p_value,
        statistic,
        cliffs_delta: cliffs_delta(x, y)?,
        n_pairs: n,
        method_note,
    })
}

/// Brute-force enumeration of all 2^n sign assignments. Shares nothing
/// with the test path except the difference/tie conventions.
pub fn wilcoxon_exact_oracle(x: &[f64], y: &[f64]) -> Result<f64> {
    let diffs = paired_differences(x, y)?;
    let n = diffs.len();
    if n > ORACLE_LIMIT {
        return Err(Error::TooManyPairs(n, ORACLE_LIMIT));
    }
    // midrank by counting: rank_i = #{|d_j| < |d_i|} + (#{|d_j| = |d_i|} + 1)/2
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks: Vec<f64> = abs
        .iter()
        .map(|a| {
            let below = abs.iter().filter(|b| *b < a).count() as f64;
            let equal = abs.iter().filter(|b| *b == a).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect();
    let total: f64 = ranks.iter().sum();
    let observed_plus: f64 = ranks
        .iter()
        .zip(&diffs)
        .filter(|(_, d)| **d > 0.0)
        .map(|(r, _)| r)
        .sum();
    let observed = observed_plus.min(total - observed_plus);
    let mut hits: u64 = 0;
    for mask in 0u32..(1u32 << n) {
        let w: f64 = (0..n)
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| ranks[i])
            .sum();
        if w <= observed {
            hits += 1;
        }
    }
    let denom = 2f64.powi(n as i32);
    Ok((2.0 * hits as f64 / denom).min(1.0))
}

/// Sample Pearson correlation and its two-sided p-value from Student's t
/// with n − 2 degrees of freedom.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::InvalidParameter(format!(
            "pearson needs at least 3 points, got {n}"
        )));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    let r = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    let df = nf - 2.0;
    let p = if (1.0 - r.abs()) < 1e-15 {
        0.0
    } else {
        let t = r * (df / (1.0 - r * r)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        (2.0 * dist.cdf(-t.abs())).min(1.0)
    };
    Ok((r, p))
}
