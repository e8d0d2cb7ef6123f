//! Block-diagonal execution of a pruned layer.
//!
//! Sorting rows and columns by (partition, original index) turns the mask
//! into a block-diagonal matrix; each block is an independent dense
//! product that can run on its own accelerator.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::layer::{validate_assignment, LinkMask, PruneResult, WeightMatrix};

#[derive(Debug, Clone)]
pub struct Block {
    /// Original row indices, ascending.
    pub rows: Vec<usize>,
    /// Original column indices, ascending.
    pub cols: Vec<usize>,
    /// Row-major `rows.len() x cols.len()` retained weights.
    pub values: Vec<f64>,
}

impl Block {
    pub fn shape(&self) -> (usize, usize) {
        (self.rows.len(), self.cols.len())
    }

    fn matvec(&self, input: &[f64]) -> Vec<f64> {
        let width = self.cols.len();
        let mut out = vec![0.0; width];
        for (r, &i) in self.rows.iter().enumerate() {
            let x = input[i];
            for (o, w) in out.iter_mut().zip(&self.values[r * width..(r + 1) * width]) {
                *o += x * w;
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct BlockDecomposition {
    pub p: usize,
    /// `row_perm[pos]` is the original row placed at `pos`.
    pub row_perm: Vec<usize>,
    pub col_perm: Vec<usize>,
    pub blocks: Vec<Block>,
    rows: usize,
    cols: usize,
}

impl BlockDecomposition {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Total retained parameters.
    pub fn parameter_count(&self) -> usize {
        self.blocks.iter().map(|b| b.values.len()).sum()
    }

    pub fn shapes(&self) -> Vec<(usize, usize)> {
        self.blocks.iter().map(Block::shape).collect()
    }
}

pub fn decompose(weights: &WeightMatrix, result: &PruneResult) -> Result<BlockDecomposition> {
    let (rows, cols) = (weights.rows(), weights.cols());
    if result.mask.rows() != rows || result.mask.cols() != cols {
        return Err(Error::DimensionMismatch(format!(
            "result is {}x{}, weights are {rows}x{cols}",
            result.mask.rows(),
            result.mask.cols()
        )));
    }
    let a = &result.assignment;
    validate_assignment(a, rows, cols).map_err(Error::Infeasible)?;
    if LinkMask::from_assignment(a)? != result.mask {
        return Err(Error::Format("mask does not match the partition assignment".into()));
    }

    let blocks: Vec<Block> = (0..a.p)
        .map(|k| {
            let (br, bc) = (a.rows_in(k), a.cols_in(k));
            let values = br
                .iter()
                .flat_map(|&i| bc.iter().map(move |&j| weights.get(i, j)))
                .collect();
            Block { rows: br, cols: bc, values }
        })
        .collect();
    let row_perm = blocks.iter().flat_map(|b| b.rows.iter().copied()).collect();
    let col_perm = blocks.iter().flat_map(|b| b.cols.iter().copied()).collect();
    Ok(BlockDecomposition { p: a.p, row_perm, col_perm, blocks, rows, cols })
}

/// Reference semantics of a pruned layer: `out[j] = sum_i x[i] w[i][j] L[i][j]`.
pub fn masked_matvec(weights: &WeightMatrix, mask: &LinkMask, input: &[f64]) -> Result<Vec<f64>> {
    if weights.rows() != mask.rows() || weights.cols() != mask.cols() {
        return Err(Error::DimensionMismatch("weights and mask differ in shape".into()));
    }
    if input.len() != weights.rows() {
        return Err(Error::DimensionMismatch(format!(
            "input has {} entries, layer has {} rows",
            input.len(),
            weights.rows()
        )));
    }
    let mut out = vec![0.0; weights.cols()];
    for (i, &x) in input.iter().enumerate() {
        for (j, (o, &w)) in out.iter_mut().zip(weights.row(i)).enumerate() {
            let l = if mask.get(i, j) { 1.0 } else { 0.0 };
            *o += x * w * l;
        }
    }
    Ok(out)
}

/// Runs every block independently and scatters the outputs back to the
/// original column order.
pub fn partitioned_matvec(decomp: &BlockDecomposition, input: &[f64]) -> Result<Vec<f64>> {
    if input.len() != decomp.rows {
        return Err(Error::DimensionMismatch(format!(
            "input has {} entries, layer has {} rows",
            input.len(),
            decomp.rows
        )));
    }
    let partial: Vec<Vec<f64>> = decomp.blocks.par_iter().map(|b| b.matvec(input)).collect();
    let mut out = vec![0.0; decomp.cols];
    for (&j, y) in decomp.col_perm.iter().zip(partial.iter().flatten()) {
        out[j] = *y;
    }
    Ok(out)
}

/// `|a - b| <= max(rel * |b|, abs_floor)`, elementwise; returns the largest
/// relative error seen (against `max(|b|, abs_floor)`) and whether all
/// elements passed.
pub fn compare_outputs(a: &[f64], b: &[f64], rel: f64, abs_floor: f64) -> (f64, bool) {
    let mut worst = 0.0f64;
    let mut ok = a.len() == b.len();
    for (x, y) in a.iter().zip(b) {
        let diff = (x - y).abs();
        worst = worst.max(diff / y.abs().max(abs_floor));
        ok &= diff <= (rel * y.abs()).max(abs_floor);
    }
    (worst, ok)
}
