//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("{path}:{line}: {message}")]
    OntologyParse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("{path}:{line}: duplicate descriptor id {id}")]
    DuplicateDescriptor {
        path: String,
        line: usize,
        id: String,
    },

    #[error("unknown descriptor id: {0}")]
    UnknownDescriptor(String),

    #[error("{path}:{line}: malformed record: {message}")]
    Record {
        path: String,
        line: usize,
        message: String,
    },

    #[error("level mismatch: expected L{expected}, found L{found}")]
    LevelMismatch { expected: u8, found: u8 },

    #[error("matrix label sets differ; cannot merge")]
    LabelMismatch,

    #[error("matrix windows differ ({0:?} vs {1:?}); cannot merge")]
    WindowMismatch((i32, i32), (i32, i32)),

    #[error("matrix is empty (no accumulated mass)")]
    EmptyMatrix,

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("unknown node: {0}")]
    UnknownNode(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("HTTP request to {url} failed: {message}")]
    Http { url: String, message: String },

    #[error("HTTP {status} from {url}")]
    HttpStatus { url: String, status: u16 },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("missing artifact {path}; produce it with `{producer}`")]
    MissingArtifact { path: String, producer: String },

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Wrap an error with the pipeline stage that produced it.
    pub fn in_stage(self, stage: &str) -> Error {
        Error::Stage {
            stage: stage.to_string(),
            source: Box::new(self),
        }
    }
}
