use std::path::PathBuf;

use thiserror::Error;

use crate::graph::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph {index}: {violations:?}")]
    InvalidGraph {
        index: usize,
        violations: Vec<Violation>,
    },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: malformed manifest: {source}")]
    Manifest {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("{path}: non-square matrix ({rows} rows, row {row} has {cols} columns)")]
    NonSquare {
        path: PathBuf,
        rows: usize,
        row: usize,
        cols: usize,
    },

    #[error("{path}: non-symmetric matrix at ({i}, {j}): {a} vs {b}")]
    NonSymmetric {
        path: PathBuf,
        i: usize,
        j: usize,
        a: f64,
        b: f64,
    },

    #[error("unknown label {0:?} (expected \"a\" or \"b\")")]
    UnknownLabel(String),

    #[error("operation requires node correspondence across graphs")]
    NoNodeCorrespondence,

    #[error("empty prototype set")]
    EmptyPrototypes,

    #[error("prototype index {index} out of range for {count} graphs")]
    PrototypeOutOfRange { index: usize, count: usize },

    #[error("degenerate dataset: median pairwise distance is zero")]
    DegenerateDataset,

    #[error("bandwidth must be positive, got {0}")]
    InvalidBandwidth(f64),

    #[error("kernel matrix has non-positive diagonal entry K[{index}][{index}] = {value}")]
    NonPositiveDiagonal { index: usize, value: f64 },

    #[error("invalid kernel matrix: {0}")]
    InvalidKernel(String),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("group sizes must both be at least 2 (m = {m}, n = {n})")]
    GroupTooSmall { m: usize, n: usize },

    #[error("null sample is empty")]
    EmptyNull,

    #[error("training data contains a single class")]
    SingleClass,

    #[error("SMO did not converge after {iterations} iterations (violation gap {gap:e}, C = {c})")]
    NonConvergence { iterations: usize, gap: f64, c: f64 },

    #[error("{folds} folds requested but the smallest class has {smallest} members")]
    TooManyFolds { folds: usize, smallest: usize },

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    /// Input or configuration problems, as opposed to failures while running.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::Io { .. } | Error::NonConvergence { .. }
        )
    }
}
