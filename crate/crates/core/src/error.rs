use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("event tree needs at least one variable")]
    NoVariables,

    #[error("variable `{name}` has {levels} level(s), at least 2 are required")]
    TooFewLevels { name: String, levels: usize },

    #[error("duplicate level `{level}` in variable `{name}`")]
    DuplicateLevel { name: String, level: String },

    #[error("duplicate variable name `{0}`")]
    DuplicateVariable(String),

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("invalid staging: {0}")]
    InvalidStaging(String),

    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("model has no stage parameters")]
    MissingParameters,

    #[error("vertices at depths {0} and {1} cannot be compared")]
    DepthMismatch(usize, usize),

    #[error("vertex rank {rank} out of range at depth {depth}")]
    VertexOutOfRange { depth: usize, rank: usize },

    #[error("invalid stage {stage} at depth {depth}")]
    InvalidStage { depth: usize, stage: usize },

    #[error("invalid order: {0}")]
    InvalidOrder(String),

    #[error("counts were built for a different variable order")]
    OrderMismatch,

    #[error("models are built on different event trees")]
    TreeMismatch,

    #[error("dataset is empty")]
    EmptyData,

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("graph contains a cycle")]
    Cyclic,

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("order is not topological for the graph")]
    NotTopological,

    #[error("exhaustive search over {p} variables exceeds the cap of {cap}")]
    TooManyVariables { p: usize, cap: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("schema violation: {0}")]
    Schema(String),

    #[error("unsupported format `{found}`, expected `{expected}`")]
    Version { found: String, expected: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
