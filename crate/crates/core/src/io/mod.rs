//! Files: UCR datasets, explanation documents and plot data.

mod document;
mod plot;
mod ucr;

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::CoreError;

pub use document::{
    read_explanation, write_explanation, ClassImpact, ExplanationDocument, IntermediateImpact, MappingDescriptor,
    RunMetadata, SCHEMA_VERSION,
};
pub use plot::{emit_plot_data, plot_csv, plot_svg};
pub use ucr::{format_ucr, parse_ucr, read_ucr, write_ucr};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: series has {found} values, expected {expected}")]
    NonUniformLength { line: usize, expected: usize, found: usize },
    #[error("file contains no series")]
    Empty,
    #[error("dataset has no labels to write")]
    MissingLabels,
    #[error("unsupported schema version {found:?}, expected {SCHEMA_VERSION:?}")]
    SchemaVersionMismatch { found: String },
    #[error("parse error: {0}")]
    Json(String),
    #[error("invalid document: {0}")]
    InvalidDocument(String),
    #[error(transparent)]
    Core(#[from] CoreError),
}

fn read_text(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|source| IoError::Io { path: path.to_path_buf(), source })
}

fn write_text(path: &Path, text: &str) -> Result<(), IoError> {
    std::fs::write(path, text).map_err(|source| IoError::Io { path: path.to_path_buf(), source })
}
