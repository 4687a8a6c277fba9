//! Experiment harness for score-based channel estimation: configuration,
//! channel dataset files, CSV reports and the experiment drivers behind the
//! `chanest` command line.

pub mod config;
pub mod dataset;
pub mod experiments;
pub mod report;
pub mod selftest;

use std::io;
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },

    #[error("configuration: {0}")]
    Config(String),

    #[error("{path}: malformed dataset: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Core(#[from] chanest_core::Error),
}

impl Error {
    pub(crate) fn io(path: &Path, source: io::Error) -> Self {
        Error::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
