use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("entry {entry} at ({row}, {col}) is outside a {nrows}x{ncols} matrix")]
    IndexOutOfRange {
        entry: usize,
        row: usize,
        col: usize,
        nrows: usize,
        ncols: usize,
    },

    #[error("invalid CSC structure: {0}")]
    InvalidCsc(String),

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("matrix must be square, got {nrows}x{ncols}")]
    NotSquare { nrows: usize, ncols: usize },

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("invalid block offsets: {0}")]
    InvalidOffsets(String),

    #[error("{path}:{line}: {msg}")]
    MatrixMarket {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("matrix is structurally singular: maximum matching has {matched} of {n} columns")]
    StructurallySingular { matched: usize, n: usize },

    #[error("invalid ND leaf count {nleaves} for {ncols} columns (must be a power of two, at most ncols)")]
    InvalidLeafCount { nleaves: usize, ncols: usize },

    #[error("thread count {threads} does not match the {nleaves} leaves of the ND tree")]
    ThreadMismatch { threads: usize, nleaves: usize },

    #[error("numerically singular: column {column} has no nonzero pivot candidate")]
    SingularColumn { column: usize },

    #[error("pattern mismatch: {0}")]
    PatternMismatch(String),

    #[error("invalid plan blob: {0}")]
    InvalidPlan(String),

    #[error("invalid options: {0}")]
    InvalidOptions(String),

    #[error("factorization is singular and cannot be used to solve")]
    SingularFactor,
}
