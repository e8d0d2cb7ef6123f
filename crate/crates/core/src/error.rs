use std::fmt;

use crate::perfmodel::SimConfig;

pub type Result<T> = std::result::Result<T, Error>;

/// Which side of the layer a node belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Row,
    Col,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::Row => f.write_str("row"),
            Side::Col => f.write_str("column"),
        }
    }
}

/// First broken rule found when checking a partition assignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    PartitionCount { p: usize, rows: usize, cols: usize },
    Length { side: Side, expected: usize, actual: usize },
    LabelOutOfRange { side: Side, node: usize, label: usize, p: usize },
    AboveUpper { side: Side, partition: usize, size: usize, upper: usize },
    UpperCount { side: Side, expected: usize, actual: usize },
    BelowLower { side: Side, partition: usize, size: usize, lower: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Violation::PartitionCount { p, rows, cols } => {
                write!(f, "partition count {p} outside [1, min({rows}, {cols})]")
            }
            Violation::Length { side, expected, actual } => {
                write!(f, "{side} labels: expected {expected} entries, got {actual}")
            }
            Violation::LabelOutOfRange { side, node, label, p } => {
                write!(f, "{side} {node} has label {label}, outside [0, {p})")
            }
            Violation::AboveUpper { side, partition, size, upper } => write!(
                f,
                "partition {partition} holds {size} {side}s, above upper bound {upper}"
            ),
            Violation::UpperCount { side, expected, actual } => write!(
                f,
                "{actual} partitions at the {side} upper bound, expected {expected}"
            ),
            Violation::BelowLower { side, partition, size, lower } => write!(
                f,
                "partition {partition} holds {size} {side}s, below lower bound {lower}"
            ),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("degenerate layer: {rows}x{cols}")]
    DegenerateLayer { rows: usize, cols: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite weight at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("partition count must be at least 1")]
    ZeroPartitions,

    #[error("more partitions than nodes: p = {p}, n = {n}")]
    TooManyPartitions { p: usize, n: usize },

    #[error("infeasible assignment: {0}")]
    Infeasible(Violation),

    #[error("instance too large for oracle: estimated {estimate} candidates, budget {budget}")]
    BudgetExceeded { estimate: u128, budget: u128 },

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("calibration missed targets: best max relative error {max_rel_err:.4}")]
    CalibrationUnreached {
        best: Box<SimConfig>,
        max_rel_err: f64,
    },

    #[error("verification failed: {0}")]
    VerificationFailed(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
