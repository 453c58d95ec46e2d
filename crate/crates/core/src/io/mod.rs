//! File formats: sample tables, admin and geocell GeoJSON, binary matrices,
//! cluster index directories and prediction tables.

mod binary;
mod geojson_io;
mod index;
mod tables;

use std::path::{Path, PathBuf};

pub use binary::{read_ids, read_matrix, write_ids, write_matrix, Matrix, EMBEDDING_MAGIC, LABEL_MAGIC};
pub use geojson_io::{
    geocells_to_geojson, parse_admin_geojson, parse_geocells_geojson, read_admin_geojson, read_geocells, write_admin_geojson,
    write_geocells,
};
pub use index::{load_cluster_index, save_cluster_index, INDEX_FORMAT_VERSION};
pub use tables::{
    format_refined_row, ids_path, read_assignments, read_embeddings, read_eval_pairs, read_predictions, read_refined, read_samples, write_assignments,
    write_embeddings, write_eval_pairs, write_predictions, write_samples, PredictionRow, REFINED_HEADER,
};

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl IoError {
    pub fn path(&self) -> &Path {
        match self {
            IoError::File { path, .. } | IoError::Format { path, .. } => path,
        }
    }

    /// True when the file could not be found or opened.
    pub fn is_missing(&self) -> bool {
        matches!(self, IoError::File { source, .. } if source.kind() == std::io::ErrorKind::NotFound)
    }
}

pub(crate) fn file_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::File {
        path: path.to_path_buf(),
        source,
    }
}

pub(crate) fn format_err(path: &Path, message: impl std::fmt::Display) -> IoError {
    IoError::Format {
        path: path.to_path_buf(),
        message: message.to_string(),
    }
}

pub(crate) fn read_to_string(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(file_err(path))
}

pub(crate) fn write_string(path: &Path, contents: &str) -> Result<(), IoError> {
    std::fs::write(path, contents).map_err(file_err(path))
}
