use std::path::PathBuf;

use crate::map::VoxelKey;

/// Errors produced by the mapping, simulation, planning and experiment layers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid region of interest: {0}")]
    InvalidRoi(String),

    #[error("voxel key {0:?} lies outside the region of interest")]
    OutOfBounds(VoxelKey),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("scene generation failed: {0}")]
    Generation(String),

    #[error("malformed snapshot: {0}")]
    Snapshot(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
