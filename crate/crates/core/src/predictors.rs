//! The prediction engines and experiment-pair enumeration.
//!
//! * `cpdp_pure`: source and target share one metric set.
//! * `ifs_our`: both projects are mapped onto distribution indicators.
//! * `ifs_min`: both projects are cut down to their common metrics.
//! * `mix`: an instance is defective if a `cpdp_pure` model or an `ifs_our`
//!   model says so.
//!
//! Engines only see the target's feature matrix while predicting; target
//! labels are read afterwards, when the confusion matrix is built.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::corpus::{intersect_features, Project};
use crate::error::{Error, Result};
use crate::learner::{self, LearnerParams, Model};
use crate::preprocess::{self, PreprocessConfig};
use crate::profile::{self, indicator_names};
use crate::stats::{prf, ConfusionMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    CpdpPure,
    IfsOur,
    IfsMin,
    Mix,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::CpdpPure, Method::IfsOur, Method::IfsMin, Method::Mix];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::CpdpPure => "cpdp_pure",
            Method::IfsOur => "ifs_our",
            Method::IfsMin => "ifs_min",
            Method::Mix => "mix",
        }
    }

    /// Whether pairs are drawn across dataset families.
    pub fn is_cross_family(self) -> bool {
        matches!(self, Method::IfsOur | Method::IfsMin)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown method `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EngineParams {
    #[serde(default)]
    pub preprocess: PreprocessConfig,
    #[serde(default)]
    pub learner: LearnerParams,
}

/// Labels (and probabilities, when a single model produced them) for a
/// target, before any look at the target's true labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub predicted: Vec<bool>,
    pub probabilities: Option<Vec<f64>>,
    pub model: Option<Model>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionOutcome {
    pub source_name: String,
    pub target_name: String,
    pub method: Method,
    pub predicted: Vec<bool>,
    pub probabilities: Option<Vec<f64>>,
    pub confusion: ConfusionMatrix,
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
}

fn evaluate(
    source_name: String,
    target: &Project,
    method: Method,
    prediction: Prediction,
) -> Result<PredictionOutcome> {
    let confusion = ConfusionMatrix::from_predictions(target.labels(), &prediction.predicted)?;
    let (precision, recall, f_measure) = prf(&confusion);
    Ok(PredictionOutcome {
        source_name,
        target_name: target.name().to_string(),
        method,
        predicted: prediction.predicted,
        probabilities: prediction.probabilities,
        confusion,
        precision,
        recall,
        f_measure,
    })
}

fn ensure_distinct(source: &Project, target: &Project) -> Result<()> {
    if source.name() == target.name() && source.dataset_family() == target.dataset_family() {
        return Err(Error::SameProject(source.name().to_string()));
    }
    Ok(())
}

fn fit_and_predict(
    train_x: &DMatrix<f64>,
    train_y: &[bool],
    names: &[String],
    target_x: &DMatrix<f64>,
    learner_params: &LearnerParams,
) -> Result<Prediction> {
    let model = learner::train(train_x, train_y, names, learner_params)?;
    let probabilities = model.predict_proba_matrix(target_x)?;
    let predicted = probabilities
        .iter()
        .map(|&p| p >= learner_params.decision_threshold)
        .collect();
    Ok(Prediction {
        predicted,
        probabilities: Some(probabilities),
        model: Some(model),
    })
}

/// Shared path for engines that work on raw metrics: `target` must already
/// be column-aligned with `source`.
fn predict_aligned(source: &Project, target: &Project, params: &EngineParams) -> Result<Prediction> {
    let train_x = preprocess::apply(source.matrix(), &params.preprocess)?;
    let test_x = preprocess::apply(target.matrix(), &params.preprocess)?;
    fit_and_predict(
        &train_x,
        source.labels(),
        &source.schema().canonical_names(),
        &test_x,
        &params.learner,
    )
}

pub fn predict_cpdp_pure(
    source: &Project,
    target: &Project,
    params: &EngineParams,
) -> Result<Prediction> {
    ensure_distinct(source, target)?;
    if !source.same_feature_set(target) {
        return Err(Error::SchemaMismatch(
            source.name().to_string(),
            target.name().to_string(),
        ));
    }
    let aligned = target.align_to(&source.schema().canonical_names())?;
    predict_aligned(source, &aligned, params)
}

pub fn predict_ifs_min(
    source: &Project,
    target: &Project,
    params: &EngineParams,
) -> Result<Prediction> {
    ensure_distinct(source, target)?;
    let (s, t) = intersect_features(source, target)?;
    predict_aligned(&s, &t, params)
}

pub fn predict_ifs_our(
    source: &Project,
    target: &Project,
    params: &EngineParams,
) -> Result<Prediction> {
    ensure_distinct(source, target)?;
    let s = profile::characterize_project(source, &params.preprocess)?;
    let t = profile::characterize_project(target, &params.preprocess)?;
    fit_and_predict(&s.matrix, &s.labels, &indicator_names(), &t.matrix, &params.learner)
}

/// Element-wise OR of component predictions.
pub fn fuse_or(a: &[bool], b: &[bool]) -> Result<Vec<bool>> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    Ok(a.iter().zip(b).map(|(x, y)| *x || *y).collect())
}

pub fn predict_mix(
    source_same: &Project,
    source_diff: &Project,
    target: &Project,
    params: &EngineParams,
) -> Result<Prediction> {
    let pure = predict_cpdp_pure(source_same, target, params)?;
    let ifs = predict_ifs_our(source_diff, target, params)?;
    Ok(Prediction {
        predicted: fuse_or(&pure.predicted, &ifs.predicted)?,
        probabilities: None,
        model: None,
    })
}

pub fn run_cpdp_pure(
    source: &Project,
    target: &Project,
    params: &EngineParams,
) -> Result<PredictionOutcome> {
    let prediction = predict_cpdp_pure(source, target, params)?;
    evaluate(source.name().into(), target, Method::CpdpPure, prediction)
}

pub fn run_ifs_our(
    source: &Project,
    target: &Project,
    params: &EngineParams,
) -> Result<PredictionOutcome> {
    let prediction = predict_ifs_our(source, target, params)?;
    evaluate(source.name().into(), target, Method::IfsOur, prediction)
}

pub fn run_ifs_min(
    source: &Project,
    target: &Project,
    params: &EngineParams,
) -> Result<PredictionOutcome> {
    let prediction = predict_ifs_min(source, target, params)?;
    evaluate(source.name().into(), target, Method::IfsMin, prediction)
}

/// Source name of a mix outcome: `<same-schema source>+<other source>`.
pub fn mix_source_name(source_same: &str, source_diff: &str) -> String {
    format!("{source_same}+{source_diff}")
}

pub fn run_mix(
    source_same: &Project,
    source_diff: &Project,
    target: &Project,
    params: &EngineParams,
) -> Result<PredictionOutcome> {
    let prediction = predict_mix(source_same, source_diff, target, params)?;
    evaluate(
        mix_source_name(source_same.name(), source_diff.name()),
        target,
        Method::Mix,
        prediction,
    )
}

/// Run a single-source engine by method tag. `Mix` needs two sources and
/// is rejected here.
pub fn run_method(
    method: Method,
    source: &Project,
    target: &Project,
    params: &EngineParams,
) -> Result<PredictionOutcome> {
    match method {
        Method::CpdpPure => run_cpdp_pure(source, target, params),
        Method::IfsOur => run_ifs_our(source, target, params),
        Method::IfsMin => run_ifs_min(source, target, params),
        Method::Mix => Err(Error::InvalidParameter(
            "mix needs two sources; use run_mix".into(),
        )),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlannedPair {
    pub source: String,
    pub target: String,
    pub method: Method,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairPlan {
    pub pairs: Vec<PlannedPair>,
}

impl PairPlan {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// All ordered (source, target) pairs for `method`, in input order.
///
/// `cpdp_pure` (and the same-schema half of `mix`) pairs projects within a
/// family; the IFS methods pair projects across families only.
pub fn enumerate_pairs(projects: &[Project], method: Method) -> PairPlan {
    let mut pairs = Vec::new();
    for source in projects {
        for target in projects {
            if source.name() == target.name() {
                continue;
            }
            let same_family = source.dataset_family() == target.dataset_family();
            if same_family != method.is_cross_family() {
                pairs.push(PlannedPair {
                    source: source.name().to_string(),
                    target: target.name().to_string(),
                    method,
                });
            }
        }
    }
    PairPlan { pairs }
}
