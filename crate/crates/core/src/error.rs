use std::path::PathBuf;

/// Errors raised anywhere in the prediction pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("empty file")]
    EmptyFile,

    #[error("missing label column `{0}`")]
    MissingLabelColumn(String),

    #[error("missing feature column `{0}`")]
    MissingFeatureColumn(String),

    #[error("duplicate feature names: `{0}`")]
    DuplicateFeature(String),

    #[error("non-numeric feature cell `{value}` in column `{column}` (row {row})")]
    NonNumericCell {
        column: String,
        row: usize,
        value: String,
    },

    #[error("non-finite value in column `{column}` (row {row})")]
    NonFinite { column: String, row: usize },

    #[error("unknown value token `{value}` for `{column}` (row {row})")]
    UnknownValue {
        column: String,
        row: usize,
        value: String,
    },

    #[error("malformed attribute declaration at line {line}: {text}")]
    MalformedAttribute { line: usize, text: String },

    #[error("sparse ARFF data is not supported (line {0})")]
    SparseArff(usize),

    #[error("row arity mismatch at line {line}: expected {expected} values, got {actual}")]
    RowArity {
        line: usize,
        expected: usize,
        actual: usize,
    },

    #[error("malformed ARFF file: {0}")]
    MalformedArff(String),

    #[error("no common metrics between `{0}` and `{1}`")]
    NoCommonMetrics(String, String),

    #[error("log filter undefined for negative values (row {row}, column {col})")]
    NegativeLogInput { row: usize, col: usize },

    #[error("insufficient rows for normalization: need at least 2, got {0}")]
    InsufficientRows(usize),

    #[error("empty instance")]
    EmptyInstance,

    #[error("degenerate training set: both classes must be present")]
    DegenerateTrainingSet,

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("feature sets differ; use an IFS method ({0} vs {1})")]
    SchemaMismatch(String, String),

    #[error("source and target must be different projects (`{0}`)")]
    SameProject(String),

    #[error("DPR undefined: target defect ratio is zero")]
    DprUndefined,

    #[error("empty input")]
    EmptyInput,

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("degenerate pairing: all differences are zero")]
    DegeneratePairing,

    #[error("too many pairs for exact enumeration: {0} (limit {1})")]
    TooManyPairs(usize, usize),

    #[error("zero variance")]
    ZeroVariance,

    #[error("config error: {0}")]
    Config(String),

    #[error("failed to load dataset `{name}`: {source}")]
    Dataset {
        name: String,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
