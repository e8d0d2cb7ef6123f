//! Weights, link masks, partition assignments and the metrics defined on
//! them: connectedness, connectedness ratio and absolute weight-loss.
//!
//! All sums over a matrix run in row-major order so two code paths that
//! visit the same links produce bit-identical totals.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Side, Violation};

/// Dense weights of a fully-connected layer. Rows are input nodes, columns
/// are output nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl WeightMatrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::DegenerateLayer { rows, cols });
        }
        if values.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} layer needs {} values, got {}",
                rows * cols,
                values.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: k / cols, col: k % cols });
        }
        Ok(Self { rows, cols, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|row| row.len() != c) {
            return Err(Error::DimensionMismatch(format!(
                "ragged rows: expected {c} columns, found {}",
                bad.len()
            )));
        }
        Self::new(r, c, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.rows, self.cols, self.values.iter().map(|v| v * factor).collect())
    }

    pub fn total_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, v| acc + v.abs())
    }
}

/// Binary link matrix `L`: a set bit keeps the link, a clear bit prunes it.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LinkMask {
    rows: usize,
    cols: usize,
    bits: Vec<bool>,
}

impl LinkMask {
    pub fn new(rows: usize, cols: usize, bits: Vec<bool>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::DegenerateLayer { rows, cols });
        }
        if bits.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} mask needs {} bits, got {}",
                rows * cols,
                bits.len()
            )));
        }
        Ok(Self { rows, cols, bits })
    }

    pub fn ones(rows: usize, cols: usize) -> Result<Self> {
        Self::new(rows, cols, vec![true; rows * cols])
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        Self::new(rows, cols, vec![false; rows * cols])
    }

    /// The mask induced by an assignment: a link survives iff both of its
    /// endpoints sit in the same partition.
    pub fn from_assignment(assignment: &PartitionAssignment) -> Result<Self> {
        let (rows, cols) = (assignment.row_of.len(), assignment.col_of.len());
        let bits = assignment
            .row_of
            .iter()
            .flat_map(|&r| assignment.col_of.iter().map(move |&c| r == c))
            .collect();
        Self::new(rows, cols, bits)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.cols + j]
    }
}

/// Maps every row and column to one of `p` partitions. Disjointness is
/// structural; balance is checked by [`validate_assignment`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PartitionAssignment {
    pub p: usize,
    pub row_of: Vec<usize>,
    pub col_of: Vec<usize>,
}

impl PartitionAssignment {
    pub fn rows_in(&self, k: usize) -> Vec<usize> {
        members(&self.row_of, k)
    }

    pub fn cols_in(&self, k: usize) -> Vec<usize> {
        members(&self.col_of, k)
    }

    /// (row count, column count) for each partition label.
    pub fn shapes(&self) -> Vec<(usize, usize)> {
        let mut shapes = vec![(0, 0); self.p];
        for &r in &self.row_of {
            if r < self.p {
                shapes[r].0 += 1;
            }
        }
        for &c in &self.col_of {
            if c < self.p {
                shapes[c].1 += 1;
            }
        }
        shapes
    }
}

fn members(labels: &[usize], k: usize) -> Vec<usize> {
    labels
        .iter()
        .enumerate()
        .filter(|&(_, &l)| l == k)
        .map(|(i, _)| i)
        .collect()
}

/// Outcome of a pruning run.
#[derive(Debug, Clone, PartialEq)]
pub struct PruneResult {
    pub assignment: PartitionAssignment,
    pub mask: LinkMask,
    pub weight_loss: f64,
    pub retained_abs_weight: f64,
    pub connectedness: usize,
    pub ratio: f64,
    pub seed: u64,
    pub restarts: usize,
}

impl PruneResult {
    /// Derives mask and metrics from an assignment over `weights`.
    pub fn from_assignment(
        weights: &WeightMatrix,
        assignment: PartitionAssignment,
        seed: u64,
        restarts: usize,
    ) -> Result<Self> {
        if assignment.row_of.len() != weights.rows() || assignment.col_of.len() != weights.cols() {
            return Err(Error::DimensionMismatch(format!(
                "assignment covers {}x{}, weights are {}x{}",
                assignment.row_of.len(),
                assignment.col_of.len(),
                weights.rows(),
                weights.cols()
            )));
        }
        let mask = LinkMask::from_assignment(&assignment)?;
        let (weight_loss, retained_abs_weight) = abs_sums(weights, |i, j| mask.get(i, j));
        let connectedness = connectedness(&mask);
        let ratio = connectedness_ratio(&mask);
        Ok(Self {
            assignment,
            mask,
            weight_loss,
            retained_abs_weight,
            connectedness,
            ratio,
            seed,
            restarts,
        })
    }
}

/// Number of surviving links.
pub fn connectedness(mask: &LinkMask) -> usize {
    mask.bits.iter().filter(|&&b| b).count()
}

pub fn connectedness_full(rows: usize, cols: usize) -> Result<usize> {
    if rows == 0 || cols == 0 {
        return Err(Error::DegenerateLayer { rows, cols });
    }
    Ok(rows * cols)
}

pub fn connectedness_ratio(mask: &LinkMask) -> f64 {
    connectedness(mask) as f64 / (mask.rows * mask.cols) as f64
}

fn check_dims(weights: &WeightMatrix, mask: &LinkMask) -> Result<()> {
    if weights.rows != mask.rows || weights.cols != mask.cols {
        return Err(Error::DimensionMismatch(format!(
            "weights are {}x{}, mask is {}x{}",
            weights.rows, weights.cols, mask.rows, mask.cols
        )));
    }
    Ok(())
}

/// Sum of `|w|` over pruned links.
pub fn weight_loss(weights: &WeightMatrix, mask: &LinkMask) -> Result<f64> {
    check_dims(weights, mask)?;
    Ok(abs_sums(weights, |i, j| mask.get(i, j)).0)
}

/// Sum of `|w|` over surviving links.
pub fn retained_abs_weight(weights: &WeightMatrix, mask: &LinkMask) -> Result<f64> {
    check_dims(weights, mask)?;
    Ok(abs_sums(weights, |i, j| mask.get(i, j)).1)
}

/// (pruned, retained) magnitude totals, accumulated row-major from `+0.0`.
pub(crate) fn abs_sums(weights: &WeightMatrix, keep: impl Fn(usize, usize) -> bool) -> (f64, f64) {
    let (mut lost, mut kept) = (0.0, 0.0);
    for i in 0..weights.rows {
        for (j, w) in weights.row(i).iter().enumerate() {
            if keep(i, j) {
                kept += w.abs();
            } else {
                lost += w.abs();
            }
        }
    }
    (lost, kept)
}

/// Group sizes for splitting `n` nodes into `p` partitions, largest first:
/// `n mod p` entries of `ceil(n/p)` followed by `floor(n/p)`.
pub fn partition_capacities(n: usize, p: usize) -> Result<Vec<usize>> {
    if p == 0 {
        return Err(Error::ZeroPartitions);
    }
    if p > n {
        return Err(Error::TooManyPartitions { p, n });
    }
    let (lower, extra) = (n / p, n % p);
    Ok((0..p).map(|k| lower + usize::from(k < extra)).collect())
}

/// Checks the balance rules on both sides. Reports the first violation,
/// scanning rows before columns and, per side: lengths, labels, upper
/// bounds, the number of upper-bound partitions, then lower bounds.
pub fn validate_assignment(
    assignment: &PartitionAssignment,
    rows: usize,
    cols: usize,
) -> std::result::Result<(), Violation> {
    let p = assignment.p;
    if p == 0 || p > rows.min(cols) {
        return Err(Violation::PartitionCount { p, rows, cols });
    }
    check_side(Side::Row, &assignment.row_of, rows, p)?;
    check_side(Side::Col, &assignment.col_of, cols, p)
}

fn check_side(side: Side, labels: &[usize], n: usize, p: usize) -> std::result::Result<(), Violation> {
    if labels.len() != n {
        return Err(Violation::Length { side, expected: n, actual: labels.len() });
    }
    let mut sizes = vec![0usize; p];
    for (node, &label) in labels.iter().enumerate() {
        if label >= p {
            return Err(Violation::LabelOutOfRange { side, node, label, p });
        }
        sizes[label] += 1;
    }
    let (lower, upper) = (n / p, n.div_ceil(p));
    if let Some((partition, &size)) = sizes.iter().enumerate().find(|&(_, &s)| s > upper) {
        return Err(Violation::AboveUpper { side, partition, size, upper });
    }
    if upper > lower {
        let at_upper = sizes.iter().filter(|&&s| s == upper).count();
        if at_upper != n % p {
            return Err(Violation::UpperCount { side, expected: n % p, actual: at_upper });
        }
    }
    if let Some((partition, &size)) = sizes.iter().enumerate().find(|&(_, &s)| s < lower) {
        return Err(Violation::BelowLower { side, partition, size, lower });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_way_6x8() -> PartitionAssignment {
        PartitionAssignment {
            p: 2,
            row_of: vec![0, 0, 0, 1, 1, 1],
            col_of: vec![0, 1, 0, 1, 0, 1, 0, 1],
        }
    }

    #[test]
    fn connectedness_examples() {
        assert_eq!(connectedness(&LinkMask::ones(6, 8).unwrap()), 48);
        assert_eq!(connectedness(&LinkMask::zeros(6, 8).unwrap()), 0);
        let mask = LinkMask::from_assignment(&two_way_6x8()).unwrap();
        assert_eq!(connectedness(&mask), 24);
        assert_eq!(connectedness_ratio(&mask), 0.5);
        assert_eq!(connectedness_ratio(&LinkMask::ones(6, 8).unwrap()), 1.0);
        assert_eq!(connectedness_ratio(&LinkMask::zeros(6, 8).unwrap()), 0.0);
    }

    #[test]
    fn full_connectedness() {
        assert_eq!(connectedness_full(6, 8).unwrap(), 48);
        assert_eq!(connectedness_full(1, 1).unwrap(), 1);
        assert_eq!(connectedness_full(7, 10).unwrap(), 70);
        assert!(matches!(connectedness_full(0, 3), Err(Error::DegenerateLayer { .. })));
        assert!(matches!(connectedness_full(3, 0), Err(Error::DegenerateLayer { .. })));
    }

    #[test]
    fn weight_loss_examples() {
        let w = WeightMatrix::from_rows(&[vec![1.0, -2.0], vec![3.0, 4.0]]).unwrap();
        let diag = LinkMask::new(2, 2, vec![true, false, false, true]).unwrap();
        assert_eq!(weight_loss(&w, &diag).unwrap(), 5.0);
        assert_eq!(retained_abs_weight(&w, &diag).unwrap(), 5.0);
        assert_eq!(weight_loss(&w, &LinkMask::ones(2, 2).unwrap()).unwrap(), 0.0);
        assert_eq!(weight_loss(&w, &LinkMask::zeros(2, 2).unwrap()).unwrap(), 10.0);
        assert!(weight_loss(&w, &LinkMask::ones(2, 3).unwrap()).is_err());
    }

    #[test]
    fn capacities() {
        assert_eq!(partition_capacities(22, 5).unwrap(), vec![5, 5, 4, 4, 4]);
        assert_eq!(partition_capacities(10, 3).unwrap(), vec![4, 3, 3]);
        assert_eq!(partition_capacities(8, 2).unwrap(), vec![4, 4]);
        assert_eq!(partition_capacities(7, 3).unwrap(), vec![3, 2, 2]);
        assert!(matches!(partition_capacities(3, 4), Err(Error::TooManyPartitions { .. })));
        assert!(matches!(partition_capacities(3, 0), Err(Error::ZeroPartitions)));
    }

    #[test]
    fn validation_examples() {
        assert_eq!(validate_assignment(&two_way_6x8(), 6, 8), Ok(()));

        let mut lopsided = two_way_6x8();
        lopsided.row_of = vec![0, 0, 0, 0, 0, 1];
        assert_eq!(
            validate_assignment(&lopsided, 6, 8),
            Err(Violation::AboveUpper { side: Side::Row, partition: 0, size: 5, upper: 3 })
        );

        let three = PartitionAssignment {
            p: 3,
            row_of: vec![0, 0, 0, 1, 1, 1, 2],
            col_of: vec![0, 0, 0, 0, 1, 1, 1, 2, 2, 2],
        };
        assert_eq!(
            validate_assignment(&three, 7, 10),
            Err(Violation::UpperCount { side: Side::Row, expected: 1, actual: 2 })
        );
    }

    #[test]
    fn validation_structural_errors() {
        let mut a = two_way_6x8();
        a.col_of.pop();
        assert!(matches!(
            validate_assignment(&a, 6, 8),
            Err(Violation::Length { side: Side::Col, .. })
        ));
        let mut a = two_way_6x8();
        a.row_of[2] = 2;
        assert!(matches!(
            validate_assignment(&a, 6, 8),
            Err(Violation::LabelOutOfRange { side: Side::Row, node: 2, .. })
        ));
        let mut a = two_way_6x8();
        a.p = 7;
        assert!(matches!(validate_assignment(&a, 6, 8), Err(Violation::PartitionCount { .. })));
    }

    #[test]
    fn weights_reject_bad_input() {
        assert!(matches!(
            WeightMatrix::new(1, 2, vec![0.0, f64::NAN]),
            Err(Error::NonFinite { row: 0, col: 1 })
        ));
        assert!(WeightMatrix::new(2, 2, vec![0.0; 3]).is_err());
        assert!(WeightMatrix::from_rows(&[vec![1.0], vec![1.0, 2.0]]).is_err());
        assert!(WeightMatrix::from_rows(&[]).is_err());
    }
}
