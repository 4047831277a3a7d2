//! Experiment harness: plan enumeration, parallel execution, best-source
//! selection, comparisons and report files.

mod boxplot;
mod config;
mod dpr;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{intersect_features, summarize, DatasetSummary, Project};
use crate::error::{Error, Result};
use crate::predictors::{
    enumerate_pairs, predict_ifs_our, run_method, run_mix, EngineParams, Method, PlannedPair,
    PredictionOutcome,
};
use crate::stats::{wilcoxon_signed_rank, ComparisonResult};

pub use boxplot::{emit_boxplot_summary, summarize_group, BoxplotSummary};
pub use config::{DataFormat, DatasetEntry, ExperimentConfig};
pub use dpr::{analyze_dpr, DprRow, LOW_DPR_THRESHOLD};

/// One executed (source, target, method) prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub source: String,
    pub target: String,
    pub method: Method,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
}

impl From<&PredictionOutcome> for ResultRow {
    fn from(o: &PredictionOutcome) -> Self {
        ResultRow {
            source: o.source_name.clone(),
            target: o.target_name.clone(),
            method: o.method,
            tp: o.confusion.tp,
            fp: o.confusion.fp,
            tn: o.confusion.tn,
            fn_: o.confusion.fn_,
            precision: o.precision,
            recall: o.recall,
            f_measure: o.f_measure,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestRow {
    pub target: String,
    pub method: Method,
    pub source: String,
    pub f_measure: f64,
    pub candidates: usize,
}

/// Best source per (target, method) by f-measure; ties go to the
/// lexicographically smallest source name. Output order follows the first
/// appearance of each (target, method) in `results`.
pub fn select_best(results: &[ResultRow]) -> Vec<BestRow> {
    let mut best: Vec<BestRow> = Vec::new();
    for r in results {
        match best
            .iter_mut()
            .find(|b| b.target == r.target && b.method == r.method)
        {
            Some(b) => {
                b.candidates += 1;
                if r.f_measure > b.f_measure
                    || (r.f_measure == b.f_measure && r.source < b.source)
                {
                    b.source = r.source.clone();
                    b.f_measure = r.f_measure;
                }
            }
            None => best.push(BestRow {
                target: r.target.clone(),
                method: r.method,
                source: r.source.clone(),
                f_measure: r.f_measure,
                candidates: 1,
            }),
        }
    }
    best
}

/// Best f-measures of two methods on the targets both cover, in the order
/// targets first appear in `best`.
pub fn paired_best_columns(best: &[BestRow], a: Method, b: Method) -> (Vec<String>, Vec<f64>, Vec<f64>) {
    let mut targets = Vec::new();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for row in best.iter().filter(|r| r.method == a) {
        if let Some(other) = best.iter().find(|r| r.method == b && r.target == row.target) {
            targets.push(row.target.clone());
            xs.push(row.f_measure);
            ys.push(other.f_measure);
        }
    }
    (targets, xs, ys)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub method_a: Method,
    pub method_b: Method,
    pub n_targets: usize,
    pub p_value: Option<f64>,
    pub statistic: Option<f64>,
    pub cliffs_delta: Option<f64>,
    pub note: String,
}

fn compare_methods(best: &[BestRow], a: Method, b: Method) -> Option<ComparisonRow> {
    let (targets, xs, ys) = paired_best_columns(best, a, b);
    if targets.is_empty() {
        return None;
    }
    let outcome: Result<ComparisonResult> = wilcoxon_signed_rank(&xs, &ys);
    Some(match outcome {
        Ok(c) => ComparisonRow {
            method_a: a,
            method_b: b,
            n_targets: targets.len(),
            p_value: Some(c.p_value),
            statistic: Some(c.statistic),
            cliffs_delta: Some(c.cliffs_delta),
            note: c.method_note,
        },
        Err(e) => ComparisonRow {
            method_a: a,
            method_b: b,
            n_targets: targets.len(),
            p_value: None,
            statistic: None,
            cliffs_delta: crate::stats::cliffs_delta(&xs, &ys).ok(),
            note: e.to_string(),
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientRow {
    pub target: String,
    pub source: String,
    pub indicator: String,
    pub abs_coefficient: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairFailure {
    pub source: String,
    pub target: String,
    pub method: Method,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config_hash: String,
    pub version: String,
    pub methods: Vec<Method>,
    pub workers: usize,
    pub repeats: usize,
    pub repeat_note: String,
    pub enumeration: String,
    pub planned_pairs: usize,
    pub executed_pairs: usize,
    pub skipped_pairs: usize,
    pub failed_pairs: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportBundle {
    pub results: Vec<ResultRow>,
    pub best: Vec<BestRow>,
    pub comparisons: Vec<ComparisonRow>,
    pub dpr: Vec<DprRow>,
    pub boxplots: Vec<BoxplotSummary>,
    pub coefficients: Vec<CoefficientRow>,
    pub summaries: BTreeMap<String, DatasetSummary>,
    /// Pairs that cannot run by construction (no common metrics).
    pub skipped: Vec<PairFailure>,
    /// Pairs that were attempted and failed.
    pub failures: Vec<PairFailure>,
    pub manifest: Manifest,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub methods: Vec<Method>,
    pub params: EngineParams,
    pub workers: usize,
    pub repeats: usize,
    pub config_hash: String,
}

impl RunOptions {
    pub fn from_config(config: &ExperimentConfig) -> Self {
        Self {
            methods: config.methods.clone(),
            params: config.engine_params(),
            workers: config.workers,
            repeats: config.repeats,
            config_hash: config.content_hash(),
        }
    }
}

/// Load the configured datasets and execute the experiment.
pub fn run_plan(config: &ExperimentConfig) -> Result<ReportBundle> {
    config.validate()?;
    let projects = config.load_datasets()?;
    run_projects(&projects, &RunOptions::from_config(config))
}

fn project_index(projects: &[Project]) -> BTreeMap<&str, &Project> {
    projects.iter().map(|p| (p.name(), p)).collect()
}

/// Execute every enumerated pair for `options.methods` on in-memory
/// projects.
pub fn run_projects(projects: &[Project], options: &RunOptions) -> Result<ReportBundle> {
    let index = project_index(projects);
    if index.len() != projects.len() {
        return Err(Error::Config("project names must be unique".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.workers.max(1))
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;

    let mut planned: Vec<PlannedPair> = Vec::new();
    let mut skipped = Vec::new();
    for &method in options.methods.iter().filter(|m| **m != Method::Mix) {
        for pair in enumerate_pairs(projects, method).pairs {
            if method == Method::IfsMin {
                if let Err(e) = intersect_features(index[pair.source.as_str()], index[pair.target.as_str()]) {
                    skipped.push(PairFailure {
                        source: pair.source,
                        target: pair.target,
                        method,
                        reason: e.to_string(),
                    });
                    continue;
                }
            }
            planned.push(pair);
        }
    }

    let outcomes: Vec<Result<PredictionOutcome>> = pool.install(|| {
        planned
            .par_iter()
            .map(|p| {
                run_method(
                    p.method,
                    index[p.source.as_str()],
                    index[p.target.as_str()],
                    &options.params,
                )
            })
            .collect()
    });

    let mut results = Vec::new();
    let mut failures = Vec::new();
    for (pair, outcome) in planned.iter().zip(outcomes) {
        match outcome {
            Ok(o) => results.push(ResultRow::from(&o)),
            Err(e) => failures.push(PairFailure {
                source: pair.source.clone(),
                target: pair.target.clone(),
                method: pair.method,
                reason: e.to_string(),
            }),
        }
    }

    let mut planned_count = planned.len();
    if options.methods.contains(&Method::Mix) {
        let best = select_best(&results);
        let mix_jobs: Vec<(&str, &str, &str)> = projects
            .iter()
            .filter_map(|t| {
                let pure = best.iter().find(|b| b.target == t.name() && b.method == Method::CpdpPure)?;
                let ifs = best.iter().find(|b| b.target == t.name() && b.method == Method::IfsOur)?;
                Some((pure.source.as_str(), ifs.source.as_str(), t.name()))
            })
            .collect();
        planned_count += mix_jobs.len();
        let mixed: Vec<Result<PredictionOutcome>> = pool.install(|| {
            mix_jobs
                .par_iter()
                .map(|(same, diff, target)| {
                    run_mix(index[same], index[diff], index[target], &options.params)
                })
                .collect()
        });
        for ((same, diff, target), outcome) in mix_jobs.iter().zip(mixed) {
            match outcome {
                Ok(o) => results.push(ResultRow::from(&o)),
                Err(e) => failures.push(PairFailure {
                    source: crate::predictors::mix_source_name(same, diff),
                    target: target.to_string(),
                    method: Method::Mix,
                    reason: e.to_string(),
                }),
            }
        }
    }

    let summaries: BTreeMap<String, DatasetSummary> = projects
        .iter()
        .map(|p| (p.name().to_string(), summarize(p)))
        .collect();
    let best = select_best(&results);

    let comparisons = [
        (Method::IfsOur, Method::IfsMin),
        (Method::IfsOur, Method::CpdpPure),
        (Method::Mix, Method::CpdpPure),
    ]
    .into_iter()
    .filter_map(|(a, b)| compare_methods(&best, a, b))
    .collect();

    let dpr = analyze_dpr(&results, &summaries)?;

    let mut groups: Vec<(String, Vec<f64>)> = Vec::new();
    for r in results.iter().filter(|r| r.method != Method::Mix) {
        let key = format!("{}/{}", r.target, r.method);
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(r.f_measure),
            None => groups.push((key, vec![r.f_measure])),
        }
    }
    let boxplots = emit_boxplot_summary(&groups)?;

    let mut coefficients = Vec::new();
    for b in best.iter().filter(|b| b.method == Method::IfsOur) {
        let prediction = predict_ifs_our(index[b.source.as_str()], index[b.target.as_str()], &options.params)?;
        if let Some(model) = prediction.model {
            for (indicator, value) in model.coefficient_magnitudes() {
                coefficients.push(CoefficientRow {
                    target: b.target.clone(),
                    source: b.source.clone(),
                    indicator,
                    abs_coefficient: value,
                });
            }
        }
    }

    let manifest = Manifest {
        config_hash: options.config_hash.clone(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        methods: options.methods.clone(),
        workers: options.workers,
        repeats: options.repeats,
        repeat_note: "pipeline is deterministic; repeated runs produce identical results and are executed once".into(),
        enumeration: "within-family ordered pairs for cpdp_pure; all cross-family ordered pairs for ifs_our/ifs_min (ifs_min pairs without common metrics skipped); one mix run per target from its best cpdp_pure and ifs_our sources".into(),
        planned_pairs: planned_count,
        executed_pairs: results.len(),
        skipped_pairs: skipped.len(),
        failed_pairs: failures.len(),
    };

    Ok(ReportBundle {
        results,
        best,
        comparisons,
        dpr,
        boxplots,
        coefficients,
        summaries,
        skipped,
        failures,
        manifest,
    })
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T], header: &[&str]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    if rows.is_empty() {
        writer.write_record(header)?;
    }
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

#[derive(Serialize)]
struct BoxplotCsvRow<'a> {
    group: &'a str,
    count: usize,
    min: f64,
    q1: f64,
    median: f64,
    q3: f64,
    max: f64,
    outliers: String,
}

pub fn boxplot_csv_rows(rows: &[BoxplotSummary]) -> Vec<impl Serialize + '_> {
    rows.iter()
        .map(|b| BoxplotCsvRow {
            group: &b.group,
            count: b.count,
            min: b.min,
            q1: b.q1,
            median: b.median,
            q3: b.q3,
            max: b.max,
            outliers: b
                .outliers
                .iter()
                .map(f64::to_string)
                .collect::<Vec<_>>()
                .join(";"),
        })
        .collect()
}

#[derive(Serialize)]
struct SummaryCsvRow<'a> {
    project: &'a str,
    instances: usize,
    defects: usize,
    defect_ratio: f64,
    metrics: usize,
}

impl ReportBundle {
    /// Write every table plus `manifest.json` into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_csv(
            &dir.join("results.csv"),
            &self.results,
            &["source", "target", "method", "tp", "fp", "tn", "fn", "precision", "recall", "f_measure"],
        )?;
        write_csv(
            &dir.join("best_per_target.csv"),
            &self.best,
            &["target", "method", "source", "f_measure", "candidates"],
        )?;
        write_csv(
            &dir.join("comparisons.csv"),
            &self.comparisons,
            &["method_a", "method_b", "n_targets", "p_value", "statistic", "cliffs_delta", "note"],
        )?;
        write_csv(
            &dir.join("dpr.csv"),
            &self.dpr,
            &[
                "target", "pure_source", "pure_dpr", "pure_f_measure", "mix_f_measure",
                "improvement", "low_dpr", "pearson_r", "pearson_p", "notes",
            ],
        )?;
        write_csv(
            &dir.join("boxplot.csv"),
            &boxplot_csv_rows(&self.boxplots),
            &["group", "count", "min", "q1", "median", "q3", "max", "outliers"],
        )?;
        write_csv(
            &dir.join("coefficients.csv"),
            &self.coefficients,
            &["target", "source", "indicator", "abs_coefficient"],
        )?;
        let summaries: Vec<SummaryCsvRow> = self
            .summaries
            .iter()
            .map(|(name, s)| SummaryCsvRow {
                project: name,
                instances: s.instance_count,
                defects: s.defect_count,
                defect_ratio: s.defect_ratio,
                metrics: s.metric_count,
            })
            .collect();
        write_csv(
            &dir.join("datasets.csv"),
            &summaries,
            &["project", "instances", "defects", "defect_ratio", "metrics"],
        )?;
        let mut problems: Vec<&PairFailure> = self.failures.iter().collect();
        problems.extend(self.skipped.iter());
        write_csv(
            &dir.join("failures.csv"),
            &problems,
            &["source", "target", "method", "reason"],
        )?;
        let manifest = serde_json::to_string_pretty(&self.manifest)
            .map_err(|e| Error::Config(e.to_string()))?;
        let path = dir.join("manifest.json");
        fs::write(&path, manifest + "\n").map_err(|e| Error::io(path, e))
    }
}

/// Read a `results.csv` written by [`ReportBundle::write`].
pub fn read_results_csv(path: impl AsRef<Path>) -> Result<Vec<ResultRow>> {
    let mut reader = csv::Reader::from_path(path.as_ref())?;
    reader
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

/// Read a `best_per_target.csv` written by [`ReportBundle::write`].
pub fn read_best_csv(path: impl AsRef<Path>) -> Result<Vec<BestRow>> {
    let mut reader = csv::Reader::from_path(path.as_ref())?;
    reader
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

/// Two named numeric columns of an arbitrary CSV file.
pub fn read_csv_columns(path: impl AsRef<Path>, x: &str, y: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let columns = read_csv_named_columns(path, &[x, y])?;
    let mut it = columns.into_iter();
    Ok((it.next().unwrap_or_default(), it.next().unwrap_or_default()))
}

pub fn read_csv_named_columns(path: impl AsRef<Path>, names: &[&str]) -> Result<Vec<Vec<f64>>> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)?;
    let headers = reader.headers()?.clone();
    let idx: Vec<usize> = names
        .iter()
        .map(|n| {
            headers
                .iter()
                .position(|h| h == *n)
                .ok_or_else(|| Error::MissingFeatureColumn(n.to_string()))
        })
        .collect::<Result<_>>()?;
    let mut out = vec![Vec::new(); names.len()];
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        for (k, &i) in idx.iter().enumerate() {
            let cell = record.get(i).unwrap_or("");
            let v: f64 = cell.parse().map_err(|_| Error::NonNumericCell {
                column: names[k].to_string(),
                row,
                value: cell.to_string(),
            })?;
            out[k].push(v);
        }
    }
    Ok(out)
}

/// String-keyed groups of a numeric column, in first-appearance order.
pub fn read_csv_groups(path: impl AsRef<Path>, group: &str, value: &str) -> Result<Vec<(String, Vec<f64>)>> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)?;
    let headers = reader.headers()?.clone();
    let find = |n: &str| {
        headers
            .iter()
            .position(|h| h == n)
            .ok_or_else(|| Error::MissingFeatureColumn(n.to_string()))
    };
    let (gi, vi) = (find(group)?, find(value)?);
    let mut groups: Vec<(String, Vec<f64>)> = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let key = record.get(gi).unwrap_or("").to_string();
        let cell = record.get(vi).unwrap_or("");
        let v: f64 = cell.parse().map_err(|_| Error::NonNumericCell {
            column: value.to_string(),
            row,
            value: cell.to_string(),
        })?;
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, vals)) => vals.push(v),
            None => groups.push((key, vec![v])),
        }
    }
    Ok(groups)
}
