use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch on {axis}: {left} vs {right}")]
    Shape {
        axis: &'static str,
        left: usize,
        right: usize,
    },
    #[error("validation failed: {}", .0.join("; "))]
    Validation(Vec<String>),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("patch geometry: {0}")]
    Geometry(String),
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("empty dataset: {0}")]
    EmptyDataset(String),
    #[error("selection would be empty: fraction {fraction} of {total} entries")]
    EmptySelection { fraction: f64, total: usize },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
    #[error("unsupported image format (expected PNG or JPEG)")]
    UnsupportedFormat,
    #[error("decode: {0}")]
    Decode(#[from] image::ImageError),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
