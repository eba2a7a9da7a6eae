use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("failed to decode image {path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("csv error in {path}: {message}")]
    Csv { path: PathBuf, message: String },

    #[error("json error in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("no image file found for id `{0}`")]
    MissingImage(String),

    #[error("duplicate image id `{0}`")]
    DuplicateId(String),

    #[error("unknown label token `{token}` for id `{id}`")]
    UnknownLabel { id: String, token: String },

    #[error("image `{id}` is {width}x{height}; both sides must be at least 16 px")]
    ImageTooSmall { id: String, width: u32, height: u32 },

    #[error("class {class} has {count} members, fewer than the {k} folds requested")]
    ClassTooSmall { class: String, count: usize, k: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate nodes: all pairwise distances are equal, so the gaussian kernel variance is zero")]
    DegenerateDistances,

    #[error("node {node} has zero degree; the log-degree barrier is undefined")]
    ZeroDegree { node: usize },

    #[error("objective became non-finite at iteration {iteration}")]
    NonFiniteObjective { iteration: usize },

    #[error("classifier `{0}` used before training")]
    NotFitted(&'static str),

    #[error("stage `{stage}` failed for image `{id}`: {source}")]
    Stage {
        stage: &'static str,
        id: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Error::Csv {
            path: path.into(),
            message: message.to_string(),
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn at_stage(self, stage: &'static str, id: &str) -> Self {
        Error::Stage {
            stage,
            id: id.to_string(),
            source: Box::new(self),
        }
    }
}
