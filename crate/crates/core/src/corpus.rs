//! Defect datasets: loading, validation, summaries and feature intersection.
//!
//! A [`Project`] is an immutable `m × n` metric matrix plus binary defect
//! labels. Projects from different public collections carry different
//! metric sets; metric identity across collections is decided by
//! case-insensitive name matching after an optional alias map.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How to turn a raw file into a [`Project`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SchemaConfig {
    /// Name of the defect column (defect counts or a textual/nominal class).
    pub label_column: String,
    /// Explicit feature columns, in order. When absent every column other
    /// than the label and the ignored columns is a feature.
    #[serde(default)]
    pub features: Option<Vec<String>>,
    /// Non-metric columns to drop (file names, versions, ...).
    #[serde(default)]
    pub ignore: Vec<String>,
    /// Local metric name -> canonical metric name.
    #[serde(default)]
    pub alias_map: BTreeMap<String, String>,
    /// Extra textual label values that mean "defective".
    #[serde(default)]
    pub positive_values: Vec<String>,
}

impl SchemaConfig {
    pub fn new(label_column: impl Into<String>) -> Self {
        Self {
            label_column: label_column.into(),
            ..Self::default()
        }
    }
}

/// Feature identity of a loaded project.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub feature_names: Vec<String>,
    pub label_column: String,
    #[serde(default)]
    pub alias_map: BTreeMap<String, String>,
}

impl FeatureSchema {
    pub fn new(
        feature_names: Vec<String>,
        label_column: impl Into<String>,
        alias_map: BTreeMap<String, String>,
    ) -> Result<Self> {
        let schema = Self {
            feature_names,
            label_column: label_column.into(),
            alias_map,
        };
        schema.validate()?;
        Ok(schema)
    }

    fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for name in self.canonical_names() {
            if !seen.insert(name.clone()) {
                return Err(Error::DuplicateFeature(name));
            }
        }
        let label = self.canonical(&self.label_column);
        if seen.contains(&label) {
            return Err(Error::DuplicateFeature(self.label_column.clone()));
        }
        Ok(())
    }

    /// Canonical form of a metric name: trimmed, lower-cased, then mapped
    /// through the alias map (whose keys also match case-insensitively).
    pub fn canonical(&self, name: &str) -> String {
        canonicalize(name, &self.alias_map)
    }

    pub fn canonical_names(&self) -> Vec<String> {
        self.feature_names
            .iter()
            .map(|n| self.canonical(n))
            .collect()
    }
}

pub fn canonicalize(name: &str, alias_map: &BTreeMap<String, String>) -> String {
    let key = name.trim().to_lowercase();
    alias_map
        .iter()
        .find(|(k, _)| k.trim().to_lowercase() == key)
        .map(|(_, v)| v.trim().to_lowercase())
        .unwrap_or(key)
}

/// A named defect dataset. Immutable once constructed.
#[derive(Debug, Clone, PartialEq)]
pub struct Project {
    name: String,
    dataset_family: String,
    schema: FeatureSchema,
    matrix: DMatrix<f64>,
    labels: Vec<bool>,
}

impl Project {
    pub fn new(
        name: impl Into<String>,
        dataset_family: impl Into<String>,
        schema: FeatureSchema,
        matrix: DMatrix<f64>,
        labels: Vec<bool>,
    ) -> Result<Self> {
        schema.validate()?;
        if matrix.nrows() == 0 || labels.is_empty() {
            return Err(Error::EmptyFile);
        }
        if matrix.ncols() == 0 {
            return Err(Error::InvalidParameter(
                "a project needs at least one feature".into(),
            ));
        }
        if matrix.nrows() != labels.len() {
            return Err(Error::LengthMismatch(matrix.nrows(), labels.len()));
        }
        if matrix.ncols() != schema.feature_names.len() {
            return Err(Error::DimensionMismatch {
                expected: schema.feature_names.len(),
                actual: matrix.ncols(),
            });
        }
        for (col, column) in matrix.column_iter().enumerate() {
            if let Some(row) = column.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    column: schema.feature_names[col].clone(),
                    row,
                });
            }
        }
        Ok(Self {
            name: name.into(),
            dataset_family: dataset_family.into(),
            schema,
            matrix,
            labels,
        })
    }

    /// Convenience constructor from row vectors with identity alias map.
    pub fn from_rows(
        name: impl Into<String>,
        dataset_family: impl Into<String>,
        feature_names: &[&str],
        rows: &[Vec<f64>],
        labels: Vec<bool>,
    ) -> Result<Self> {
        let n = feature_names.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: bad.len(),
            });
        }
        let matrix = DMatrix::from_row_iterator(rows.len(), n, rows.iter().flatten().copied());
        let schema = FeatureSchema::new(
            feature_names.iter().map(|s| s.to_string()).collect(),
            "bug",
            BTreeMap::new(),
        )?;
        Self::new(name, dataset_family, schema, matrix, labels)
    }

    pub fn with_identity(mut self, name: impl Into<String>, family: impl Into<String>) -> Self {
        self.name = name.into();
        self.dataset_family = family.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dataset_family(&self) -> &str {
        &self.dataset_family
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn instance_count(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn feature_count(&self) -> usize {
        self.matrix.ncols()
    }

    /// True when both projects carry the same canonical metric set
    /// (order ignored).
    pub fn same_feature_set(&self, other: &Project) -> bool {
        let mut a = self.schema.canonical_names();
        let mut b = other.schema.canonical_names();
        a.sort();
        b.sort();
        a == b
    }

    /// Keep only the given columns, in the given order.
    pub fn select_columns(&self, columns: &[usize]) -> Project {
        let matrix = self.matrix.select_columns(columns);
        let schema = FeatureSchema {
            feature_names: columns
                .iter()
                .map(|&c| self.schema.feature_names[c].clone())
                .collect(),
            label_column: self.schema.label_column.clone(),
            alias_map: self.schema.alias_map.clone(),
        };
        Project {
            name: self.name.clone(),
            dataset_family: self.dataset_family.clone(),
            schema,
            matrix,
            labels: self.labels.clone(),
        }
    }

    /// Reorder columns so the canonical names follow `canonical_order`.
    pub fn align_to(&self, canonical_order: &[String]) -> Result<Project> {
        let index: HashMap<String, usize> = self
            .schema
            .canonical_names()
            .into_iter()
            .enumerate()
            .map(|(i, n)| (n, i))
            .collect();
        let columns = canonical_order
            .iter()
            .map(|n| {
                index
                    .get(n)
                    .copied()
                    .ok_or_else(|| Error::MissingFeatureColumn(n.clone()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(self.select_columns(&columns))
    }
}

/// Instance/defect counts of a project.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub instance_count: usize,
    pub defect_count: usize,
    pub defect_ratio: f64,
    pub metric_count: usize,
}

pub fn summarize(project: &Project) -> DatasetSummary {
    let instance_count = project.instance_count();
    let defect_count = project.labels().iter().filter(|&&l| l).count();
    DatasetSummary {
        instance_count,
        defect_count,
        defect_ratio: defect_count as f64 / instance_count as f64,
        metric_count: project.feature_count(),
    }
}

/// Restrict both projects to their common canonical metrics. The column
/// order follows `a`.
pub fn intersect_features(a: &Project, b: &Project) -> Result<(Project, Project)> {
    let a_names = a.schema().canonical_names();
    let b_names: HashSet<String> = b.schema().canonical_names().into_iter().collect();
    let (a_cols, common): (Vec<usize>, Vec<String>) = a_names
        .into_iter()
        .enumerate()
        .filter(|(_, n)| b_names.contains(n))
        .unzip();
    if common.is_empty() {
        return Err(Error::NoCommonMetrics(a.name().into(), b.name().into()));
    }
    let a_out = a.select_columns(&a_cols);
    let b_out = b.align_to(&common)?;
    Ok((a_out, b_out))
}

// ---------------------------------------------------------------------------
// Loading
// ---------------------------------------------------------------------------

/// Raw header + string cells, before type conversion.
struct RawTable {
    headers: Vec<String>,
    /// (1-based source line, cells)
    rows: Vec<(usize, Vec<String>)>,
}

fn project_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Load a comma-separated file with a header row.
pub fn load_csv(path: impl AsRef<Path>, config: &SchemaConfig) -> Result<Project> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let table = parse_csv(&text)?;
    build_project(project_stem(path), table, config)
}

fn parse_csv(text: &str) -> Result<RawTable> {
    if text.trim().is_empty() {
        return Err(Error::EmptyFile);
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if record.len() != headers.len() {
            return Err(Error::RowArity {
                line,
                expected: headers.len(),
                actual: record.len(),
            });
        }
        rows.push((line, record.iter().map(str::to_owned).collect()));
    }
    Ok(RawTable { headers, rows })
}

#[derive(Debug, Clone, PartialEq)]
enum AttributeKind {
    Numeric,
    Nominal(Vec<String>),
    Text,
}

/// Load the dense subset of the attribute-relation file format.
pub fn load_arff(path: impl AsRef<Path>, config: &SchemaConfig) -> Result<Project> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let table = parse_arff(&text)?;
    build_project(project_stem(path), table, config)
}

fn parse_arff(text: &str) -> Result<RawTable> {
    let mut headers: Vec<String> = Vec::new();
    let mut kinds = Vec::new();
    let mut rows = Vec::new();
    let mut in_data = false;
    let mut saw_relation = false;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        if in_data {
            if line.starts_with('{') {
                return Err(Error::SparseArff(line_no));
            }
            let cells = split_arff_row(line);
            if cells.len() != headers.len() {
                return Err(Error::RowArity {
                    line: line_no,
                    expected: headers.len(),
                    actual: cells.len(),
                });
            }
            for ((cell, kind), name) in cells.iter().zip(&kinds).zip(&headers) {
                if let AttributeKind::Nominal(values) = kind {
                    if cell != "?" && !values.iter().any(|v| v == cell) {
                        return Err(Error::UnknownValue {
                            column: name.clone(),
                            row: rows.len(),
                            value: cell.clone(),
                        });
                    }
                }
            }
            rows.push((line_no, cells));
            continue;
        }
        let lower = line.to_lowercase();
        if lower.starts_with("@relation") {
            saw_relation = true;
        } else if lower.starts_with("@attribute") {
            let (name, kind) = parse_attribute(&line["@attribute".len()..], line_no, line)?;
            headers.push(name);
            kinds.push(kind);
        } else if lower.starts_with("@data") {
            in_data = true;
        } else {
            return Err(Error::MalformedArff(format!(
                "unexpected line {line_no} in header: {line}"
            )));
        }
    }
    if !saw_relation {
        return Err(Error::MalformedArff("missing @relation".into()));
    }
    if !in_data {
        return Err(Error::MalformedArff("missing @data section".into()));
    }
    if headers.is_empty() {
        return Err(Error::MalformedArff("no attributes declared".into()));
    }
    // string attributes survive only as ignored columns; conversion reports
    // them as non-numeric otherwise.
    Ok(RawTable { headers, rows })
}

fn parse_attribute(rest: &str, line: usize, text: &str) -> Result<(String, AttributeKind)> {
    let malformed = || Error::MalformedAttribute {
        line,
        text: text.to_string(),
    };
    let rest = rest.trim();
    let (name, tail) = match rest.chars().next() {
        Some(q @ ('\'' | '"')) => {
            let end = rest[1..].find(q).ok_or_else(malformed)? + 1;
            (rest[1..end].to_string(), rest[end + 1..].trim())
        }
        Some(_) => {
            let end = rest
                .find(|c: char| c.is_whitespace() || c == '{')
                .ok_or_else(malformed)?;
            (rest[..end].to_string(), rest[end..].trim())
        }
        None => return Err(malformed()),
    };
    if name.is_empty() || tail.is_empty() {
        return Err(malformed());
    }
    let kind = if tail.starts_with('{') {
        let close = tail.rfind('}').ok_or_else(malformed)?;
        let values: Vec<String> = split_arff_row(&tail[1..close]);
        if values.is_empty() || values.iter().any(|v| v.is_empty()) {
            return Err(malformed());
        }
        AttributeKind::Nominal(values)
    } else {
        match tail.split_whitespace().next().unwrap_or("").to_lowercase().as_str() {
            "numeric" | "real" | "integer" => AttributeKind::Numeric,
            "string" => AttributeKind::Text,
            _ => return Err(malformed()),
        }
    };
    Ok((name, kind))
}

fn split_arff_row(line: &str) -> Vec<String> {
    let mut cells = Vec::new();
    let mut current = String::new();
    let mut quote: Option<char> = None;
    for c in line.chars() {
        match (quote, c) {
            (Some(q), c) if c == q => quote = None,
            (Some(_), c) => current.push(c),
            (None, '\'' | '"') => quote = Some(c),
            (None, ',') => {
                cells.push(current.trim().to_string());
                current.clear();
            }
            (None, c) => current.push(c),
        }
    }
    cells.push(current.trim().to_string());
    cells
}

fn find_column(headers: &[String], wanted: &str) -> Option<usize> {
    headers.iter().position(|h| h == wanted).or_else(|| {
        let w = wanted.trim().to_lowercase();
        headers.iter().position(|h| h.trim().to_lowercase() == w)
    })
}

const POSITIVE_TOKENS: &[&str] = &["true", "yes", "y", "t", "buggy", "defective", "bug"];
const NEGATIVE_TOKENS: &[&str] = &["false", "no", "n", "f", "clean", "non-buggy", "nonbuggy"];

/// Defect counts > 0 and textual true/yes/buggy map to 1.
fn binarize(token: &str, column: &str, row: usize, positive_values: &[String]) -> Result<bool> {
    let t = token.trim();
    if let Ok(v) = t.parse::<f64>() {
        if !v.is_finite() {
            return Err(Error::NonFinite {
                column: column.into(),
                row,
            });
        }
        return Ok(v > 0.0);
    }
    let lower = t.to_lowercase();
    if positive_values.iter().any(|p| p.trim().to_lowercase() == lower)
        || POSITIVE_TOKENS.contains(&lower.as_str())
    {
        Ok(true)
    } else if NEGATIVE_TOKENS.contains(&lower.as_str()) {
        Ok(false)
    } else {
        Err(Error::UnknownValue {
            column: column.into(),
            row,
            value: t.into(),
        })
    }
}

fn build_project(name: String, table: RawTable, config: &SchemaConfig) -> Result<Project> {
    let RawTable { headers, rows } = table;
    if headers.is_empty() {
        return Err(Error::EmptyFile);
    }
    let label_idx = find_column(&headers, &config.label_column)
        .ok_or_else(|| Error::MissingLabelColumn(config.label_column.clone()))?;
    if rows.is_empty() {
        return Err(Error::EmptyFile);
    }

    let feature_idx: Vec<usize> = match &config.features {
        Some(names) => names
            .iter()
            .map(|n| find_column(&headers, n).ok_or_else(|| Error::MissingFeatureColumn(n.clone())))
            .collect::<Result<_>>()?,
        None => {
            let ignored: HashSet<String> =
                config.ignore.iter().map(|s| s.trim().to_lowercase()).collect();
            (0..headers.len())
                .filter(|&i| i != label_idx && !ignored.contains(&headers[i].trim().to_lowercase()))
                .collect()
        }
    };
    if feature_idx.contains(&label_idx) {
        return Err(Error::DuplicateFeature(headers[label_idx].clone()));
    }

    let schema = FeatureSchema::new(
        feature_idx.iter().map(|&i| headers[i].clone()).collect(),
        headers[label_idx].clone(),
        config.alias_map.clone(),
    )?;

    let m = rows.len();
    let n = feature_idx.len();
    let mut matrix = DMatrix::<f64>::zeros(m, n);
    let mut labels = Vec::with_capacity(m);
    for (r, (_, cells)) in rows.iter().enumerate() {
        for (c, &src) in feature_idx.iter().enumerate() {
            let cell = cells[src].trim();
            let value: f64 = cell.parse().map_err(|_| Error::NonNumericCell {
                column: headers[src].clone(),
                row: r,
                value: cell.to_string(),
            })?;
            if !value.is_finite() {
                return Err(Error::NonFinite {
                    column: headers[src].clone(),
                    row: r,
                });
            }
            matrix[(r, c)] = value;
        }
        labels.push(binarize(
            &cells[label_idx],
            &headers[label_idx],
            r,
            &config.positive_values,
        )?);
    }
    Project::new(name, "", schema, matrix, labels)
}
