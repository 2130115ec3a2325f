//! Active learning simulation framework for entity alignment between two
//! knowledge graphs.
//!
//! The library is organized around a fixed pipeline: load or generate a pair
//! of graphs with ground-truth alignments ([`kg`]), precompute structural node
//! rankings ([`metrics`]), train an embedding matcher on incrementally
//! discovered alignments ([`model`]), select labeling queries with one of the
//! supported heuristics ([`heuristics`]), and drive the batch-wise pool/oracle
//! loop ([`simulator`]). [`analysis`] summarizes learning curves (AUC, Welch's
//! t-test) and [`experiment`] runs full heuristic-by-seed sweeps from a config
//! file.

pub mod analysis;
pub mod experiment;
pub mod heuristics;
pub mod kg;
pub mod metrics;
pub mod model;
pub mod simulator;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at {path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },
    #[error("unknown entity {name:?} at {path}:{line}")]
    UnknownEntity {
        path: String,
        line: usize,
        name: String,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("training diverged (non-finite loss) at epoch {epoch}")]
    Diverged { epoch: usize },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error on {path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
