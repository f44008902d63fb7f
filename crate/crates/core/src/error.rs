//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("{what} is not normalized (sum = {sum})")]
    NotNormalized { what: String, sum: f64 },

    #[error("unknown environment '{0}'")]
    UnknownEnvironment(String),

    #[error("parse error in {path} line {line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("duplicate chip id {0}")]
    DuplicateChip(u32),

    #[error("expected {expected} rows, found {got}")]
    RowCount { expected: usize, got: usize },

    #[error("prior file sums to zero")]
    ZeroSumPrior,

    #[error("encoder row {meaning} degenerated: all word weights vanished")]
    DegenerateRow { meaning: usize },

    #[error("frontier is empty")]
    EmptyFrontier,

    #[error("correlation undefined: {0} series is constant")]
    ConstantSeries(&'static str),

    #[error("design matrix is rank deficient (rank {rank} < {cols} columns)")]
    RankDeficient { rank: usize, cols: usize },

    #[error("empty member set has no convex hull")]
    EmptySet,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
