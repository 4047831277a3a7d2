#![allow(dead_code, clippy::too_many_arguments)]

use cpdp_core::corpus::Project;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut impl Rng) -> f64 {
    let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Software-metric-like project: every metric grows with a latent module
/// size, and defective modules are larger. `signal` scales how much.
pub fn synthetic_project(
    name: &str,
    family: &str,
    prefix: &str,
    n_features: usize,
    n_instances: usize,
    defect_ratio: f64,
    signal: f64,
    seed: u64,
) -> Project {
    let mut rng = rng(seed);
    let scales: Vec<f64> = (0..n_features).map(|_| 1.0 + 50.0 * rng.random::<f64>()).collect();
    let mut rows = Vec::with_capacity(n_instances);
    let mut labels = Vec::with_capacity(n_instances);
    for i in 0..n_instances {
        // Guarantee both classes appear.
        let defective = match i {
            0 => true,
            1 => false,
            _ => rng.random::<f64>() < defect_ratio,
        };
        let size = (0.4 * normal(&mut rng) + if defective { signal } else { 0.0 }).exp();
        rows.push(
            scales
                .iter()
                .map(|s| s * size * (0.3 * normal(&mut rng)).exp())
                .collect(),
        );
        labels.push(defective);
    }
    let names: Vec<String> = (0..n_features).map(|j| format!("{prefix}{j}")).collect();
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    Project::from_rows(name, family, &refs, &rows, labels).unwrap()
}

/// Expected f-measure of labeling each target instance defective with
/// probability `ratio`, estimated over `trials` random labelings.
pub fn random_baseline_f(labels: &[bool], ratio: f64, trials: usize, seed: u64) -> f64 {
    let mut rng = rng(seed);
    let mut total = 0.0;
    for _ in 0..trials {
        let (mut tp, mut fp, mut fn_) = (0.0, 0.0, 0.0);
        for &actual in labels {
            let predicted = rng.random::<f64>() < ratio;
            match (predicted, actual) {
                (true, true) => tp += 1.0,
                (true, false) => fp += 1.0,
                (false, true) => fn_ += 1.0,
                _ => {}
            }
        }
        let p = if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 };
        let r = if tp + fn_ > 0.0 { tp / (tp + fn_) } else { 0.0 };
        total += if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
    }
    total / trials as f64
}

pub fn read_two_columns(file: &str, a: &str, b: &str) -> (Vec<f64>, Vec<f64>) {
    let path = format!("{}/tests/data/{file}", env!("CARGO_MANIFEST_DIR"));
    cpdp_core::harness::read_csv_columns(path, a, b).unwrap()
}

/// Project whose defective instances spread wider across their metrics:
/// each metric is `scale·(10 + sd·N(0,1))` with `sd = 1 + signal` for
/// defective rows and 1 otherwise. No shared latent size.
pub fn spread_project(
    name: &str,
    family: &str,
    prefix: &str,
    n_features: usize,
    n_instances: usize,
    defect_ratio: f64,
    signal: f64,
    seed: u64,
) -> Project {
    let mut rng = rng(seed);
    let scales: Vec<f64> = (0..n_features).map(|_| 1.0 + 50.0 * rng.random::<f64>()).collect();
    let mut rows = Vec::with_capacity(n_instances);
    let mut labels = Vec::with_capacity(n_instances);
    for i in 0..n_instances {
        let defective = match i {
            0 => true,
            1 => false,
            _ => rng.random::<f64>() < defect_ratio,
        };
        let sd = if defective { 1.0 + signal } else { 1.0 };
        rows.push(
            scales
                .iter()
                .map(|s| s * (10.0 + sd * normal(&mut rng)))
                .collect(),
        );
        labels.push(defective);
    }
    let names: Vec<String> = (0..n_features).map(|j| format!("{prefix}{j}")).collect();
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    Project::from_rows(name, family, &refs, &rows, labels).unwrap()
}
