//! On-disk formats.
//!
//! Matrices are either CSV (one row per line, comma separated decimals) or
//! the `BPWM` binary layout:
//!
//! ```text
//! offset  size  field
//! 0       4     magic "BPWM"
//! 4       4     version, u32 LE (= 1)
//! 8       4     rows, u32 LE
//! 12      4     cols, u32 LE
//! 16      4*n   rows*cols IEEE-754 f32 LE, row-major
//! ```
//!
//! Both formats store FP-32 values; loading rounds CSV input to the nearest
//! f32 so a matrix means the same thing whichever format carried it.
//! Pruning results are JSON ([`ResultFile`]).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layer::{PartitionAssignment, PruneResult, WeightMatrix};

pub const MAGIC: &[u8; 4] = b"BPWM";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 16;

pub fn round_to_f32(v: f64) -> f64 {
    v as f32 as f64
}

pub fn encode_binary(weights: &WeightMatrix) -> Result<Vec<u8>> {
    let dim = |n: usize| {
        u32::try_from(n).map_err(|_| Error::Format(format!("dimension {n} does not fit in u32")))
    };
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * weights.values().len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&dim(weights.rows())?.to_le_bytes());
    out.extend_from_slice(&dim(weights.cols())?.to_le_bytes());
    for &v in weights.values() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    Ok(out)
}

pub fn decode_binary(bytes: &[u8]) -> Result<WeightMatrix> {
    if bytes.len() < HEADER_LEN || &bytes[..4] != MAGIC {
        return Err(Error::Format("missing BPWM header".into()));
    }
    let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap());
    let version = word(4);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported BPWM version {version}")));
    }
    let (rows, cols) = (word(8) as usize, word(12) as usize);
    let payload = &bytes[HEADER_LEN..];
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| Error::Format(format!("{rows}x{cols} overflows")))?;
    if payload.len() != expected {
        return Err(Error::Format(format!(
            "{rows}x{cols} matrix needs {expected} payload bytes, found {}",
            payload.len()
        )));
    }
    let values = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    WeightMatrix::new(rows, cols, values)
}

pub fn encode_csv(weights: &WeightMatrix) -> String {
    let mut out = String::new();
    for i in 0..weights.rows() {
        for (j, &v) in weights.row(i).iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            write!(out, "{}", v as f32).unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn decode_csv(text: &str) -> Result<WeightMatrix> {
    let mut rows = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|field| {
                field.trim().parse::<f64>().map(round_to_f32).map_err(|e| {
                    Error::Format(format!("line {}: bad number {:?}: {e}", line_no + 1, field.trim()))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    WeightMatrix::from_rows(&rows)
}

/// Reads either format, sniffing the magic bytes.
pub fn read_matrix(path: &Path) -> Result<WeightMatrix> {
    let bytes = fs::read(path)?;
    if bytes.starts_with(MAGIC) {
        decode_binary(&bytes)
    } else {
        let text = String::from_utf8(bytes).map_err(|_| Error::Format("not UTF-8 CSV or BPWM".into()))?;
        decode_csv(&text)
    }
}

/// Writes CSV when the path ends in `.csv`, binary otherwise.
pub fn write_matrix(path: &Path, weights: &WeightMatrix) -> Result<()> {
    let is_csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_csv {
        fs::write(path, encode_csv(weights))?;
    } else {
        fs::write(path, encode_binary(weights)?)?;
    }
    Ok(())
}

/// JSON form of a pruning result. Partition labels are 0-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultFile {
    pub rows: usize,
    pub cols: usize,
    pub p: usize,
    pub seed: u64,
    pub restarts: usize,
    pub row_partition: Vec<usize>,
    pub col_partition: Vec<usize>,
    pub weight_loss: f64,
    pub retained_abs_weight: f64,
    pub connectedness: usize,
    pub ratio: f64,
    pub refined: bool,
}

impl ResultFile {
    pub fn from_result(result: &PruneResult, refined: bool) -> Self {
        Self {
            rows: result.mask.rows(),
            cols: result.mask.cols(),
            p: result.assignment.p,
            seed: result.seed,
            restarts: result.restarts,
            row_partition: result.assignment.row_of.clone(),
            col_partition: result.assignment.col_of.clone(),
            weight_loss: result.weight_loss,
            retained_abs_weight: result.retained_abs_weight,
            connectedness: result.connectedness,
            ratio: result.ratio,
            refined,
        }
    }

    pub fn assignment(&self) -> PartitionAssignment {
        PartitionAssignment {
            p: self.p,
            row_of: self.row_partition.clone(),
            col_of: self.col_partition.clone(),
        }
    }

    /// Rebuilds the result against `weights`; metrics are recomputed, not
    /// trusted from the file.
    pub fn to_result(&self, weights: &WeightMatrix) -> Result<PruneResult> {
        if (self.rows, self.cols) != (weights.rows(), weights.cols()) {
            return Err(Error::DimensionMismatch(format!(
                "result is {}x{}, weights are {}x{}",
                self.rows,
                self.cols,
                weights.rows(),
                weights.cols()
            )));
        }
        PruneResult::from_assignment(weights, self.assignment(), self.seed, self.restarts)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Ok(serde_json::from_slice(&fs::read(path)?)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}
