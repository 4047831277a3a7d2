use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{self, Project, SchemaConfig};
use crate::error::{Error, Result};
use crate::learner::LearnerParams;
use crate::predictors::{EngineParams, Method};
use crate::preprocess::PreprocessConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataFormat {
    Csv,
    Arff,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetEntry {
    pub name: String,
    pub family: String,
    pub path: PathBuf,
    /// Inferred from the file extension when absent.
    #[serde(default)]
    pub format: Option<DataFormat>,
    #[serde(flatten)]
    pub schema: SchemaConfig,
}

impl DatasetEntry {
    pub fn format(&self) -> Result<DataFormat> {
        if let Some(f) = self.format {
            return Ok(f);
        }
        match self
            .path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_lowercase)
            .as_deref()
        {
            Some("csv") => Ok(DataFormat::Csv),
            Some("arff") => Ok(DataFormat::Arff),
            _ => Err(Error::Config(format!(
                "dataset `{}`: cannot infer format of {}",
                self.name,
                self.path.display()
            ))),
        }
    }

    pub fn load(&self) -> Result<Project> {
        let loaded = match self.format()? {
            DataFormat::Csv => corpus::load_csv(&self.path, &self.schema),
            DataFormat::Arff => corpus::load_arff(&self.path, &self.schema),
        };
        loaded
            .map(|p| p.with_identity(&self.name, &self.family))
            .map_err(|e| Error::Dataset {
                name: self.name.clone(),
                source: Box::new(e),
            })
    }
}

fn default_output() -> PathBuf {
    PathBuf::from("cpdp-report")
}

fn default_workers() -> usize {
    4
}

fn default_methods() -> Vec<Method> {
    Method::ALL.to_vec()
}

fn default_repeats() -> usize {
    1
}

/// A whole experiment, usually read from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default)]
    pub preprocess: PreprocessConfig,
    #[serde(default)]
    pub learner: LearnerParams,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    /// Recorded in the manifest; the pipeline is deterministic so repeated
    /// runs coincide.
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    /// Reserved; nothing in the pipeline draws random numbers.
    #[serde(default)]
    pub seed: Option<u64>,
    pub datasets: Vec<DatasetEntry>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Read a TOML file; relative dataset paths resolve against the file's
    /// directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for entry in &mut config.datasets {
            if entry.path.is_relative() {
                entry.path = base.join(&entry.path);
            }
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.datasets.is_empty() {
            return Err(Error::Config("no datasets configured".into()));
        }
        let mut names = HashSet::new();
        for d in &self.datasets {
            if d.name.trim().is_empty() || d.family.trim().is_empty() {
                return Err(Error::Config("dataset name and family must be non-empty".into()));
            }
            if !names.insert(d.name.as_str()) {
                return Err(Error::Config(format!("duplicate dataset name `{}`", d.name)));
            }
            d.format()?;
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("no methods configured".into()));
        }
        if self.methods.contains(&Method::Mix)
            && !(self.methods.contains(&Method::CpdpPure) && self.methods.contains(&Method::IfsOur))
        {
            return Err(Error::Config(
                "mix needs both cpdp_pure and ifs_our in methods".into(),
            ));
        }
        if self.repeats == 0 {
            return Err(Error::Config("repeats must be at least 1".into()));
        }
        self.learner
            .validate()
            .map_err(|e| Error::Config(e.to_string()))
    }

    pub fn engine_params(&self) -> EngineParams {
        EngineParams {
            preprocess: self.preprocess,
            learner: self.learner,
        }
    }

    /// SHA-256 over the canonical JSON form of the configuration.
    pub fn content_hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    /// Load every dataset, failing on the first one that does not load.
    pub fn load_datasets(&self) -> Result<Vec<Project>> {
        self.datasets.iter().map(DatasetEntry::load).collect()
    }
}
