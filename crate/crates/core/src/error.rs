use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("insufficient support: need at least {needed} points, got {got}")]
    InsufficientSupport { needed: usize, got: usize },

    #[error("degenerate geometry: |det| = {det:e}")]
    DegenerateGeometry { det: f64 },

    #[error("map has no landmarks")]
    EmptyMap,

    #[error("zero-norm feature vector")]
    ZeroFeature,

    #[error("landmark packing failed after {attempts} attempts ({placed} of {requested} placed)")]
    PackingFailed {
        attempts: usize,
        placed: usize,
        requested: usize,
    },

    #[error("trajectory mismatch: {0}")]
    TrajectoryMismatch(String),

    #[error("input mismatch: {0}")]
    InputMismatch(String),

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("parse error in {path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Stable machine-readable category, printed by the CLI on failure.
    pub fn category(&self) -> &'static str {
        match self {
            Error::InsufficientSupport { .. } => "InsufficientSupport",
            Error::DegenerateGeometry { .. } => "DegenerateGeometry",
            Error::EmptyMap => "EmptyMap",
            Error::ZeroFeature => "ZeroFeature",
            Error::PackingFailed { .. } => "PackingFailed",
            Error::TrajectoryMismatch(_) => "TrajectoryMismatch",
            Error::InputMismatch(_) => "InputMismatch",
            Error::SchemaMismatch(_) => "SchemaMismatch",
            Error::Config(_) => "ConfigError",
            Error::Parse { .. } => "ParseError",
            Error::Io { .. } => "IoError",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
