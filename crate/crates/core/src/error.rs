use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("evidence set is empty")]
    EmptyEvidence,

    #[error("hypothesis set is empty")]
    EmptyHypotheses,

    #[error("external gain matrix is {found_rows}x{found_cols}, expected {rows}x{cols}")]
    MatrixShapeMismatch { rows: usize, cols: usize, found_rows: usize, found_cols: usize },

    #[error("gain matrix has {rows} rows but {weights} weights were given")]
    ShapeMismatch { rows: usize, weights: usize },

    #[error("evidence candidate {index} has no score, required by this weighting")]
    MissingScore { index: usize },

    #[error("evidence candidate {index} has no usable model_id{}", .model_id.as_deref().map(|m| format!(" ({m:?} has no mixture weight)")).unwrap_or_default())]
    MissingModelId { index: usize, model_id: Option<String> },

    #[error("{set} candidate {index} has no answer")]
    MissingAnswer { set: &'static str, index: usize },

    #[error("metric `external` needs an external_gain matrix on the instance")]
    MissingExternalGain,

    #[error("non-finite value in {0}")]
    NonFiniteValue(String),

    #[error("n-gram order mismatch: {left} vs {right}")]
    OrderMismatch { left: usize, right: usize },

    #[error("evidence candidate {index} has zero tokens; length correction is undefined")]
    ZeroLengthCandidate { index: usize },

    #[error("importance weights are degenerate (no finite positive mass)")]
    DegenerateWeights,

    #[error("output space has {size} sequences, limit is {limit}")]
    SpaceTooLarge { size: usize, limit: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("line {line}: not valid JSON: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: schema error: {message}")]
    Schema { line: usize, message: String },

    #[error("cell ({row}, {col}): {source}")]
    AtCell {
        row: usize,
        col: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("instance {id:?}: {source}")]
    InInstance {
        id: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn at_cell(self, row: usize, col: usize) -> Self {
        Error::AtCell { row, col, source: Box::new(self) }
    }

    pub(crate) fn in_instance(self, id: &str) -> Self {
        match self {
            e @ Error::InInstance { .. } => e,
            e => Error::InInstance { id: id.to_owned(), source: Box::new(e) },
        }
    }

    /// Strips instance and cell context wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtCell { source, .. } | Error::InInstance { source, .. } => source.root(),
            e => e,
        }
    }

    pub fn is_config(&self) -> bool {
        matches!(self.root(), Error::InvalidConfig(_))
    }
}
