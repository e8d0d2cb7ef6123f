//! Exhaustive solver for the balanced partition pruning objective.
//!
//! Candidates are every split of the rows into groups with the row
//! capacity multiset, every split of the columns with the column capacity
//! multiset, and every bijection between the two families of groups. Row
//! groups of equal size are interchangeable, so they are enumerated in
//! canonical order (by their first member); each distinct mask is visited
//! exactly once.

use crate::error::{Error, Result};
use crate::layer::{abs_sums, partition_capacities, PartitionAssignment, WeightMatrix};

use super::check_partition_count;

pub const DEFAULT_BUDGET: u128 = 10_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub optimum_loss: f64,
    pub optimum_assignment: PartitionAssignment,
    pub enumerated: u128,
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 1..=k as u128 {
        acc = match acc.checked_mul(n as u128 - k as u128 + i) {
            Some(v) => v / i,
            None => return u128::MAX,
        };
    }
    acc
}

fn factorial(n: usize) -> u128 {
    (1..=n as u128).try_fold(1u128, |acc, i| acc.checked_mul(i)).unwrap_or(u128::MAX)
}

/// Labeled splits of `n` items into groups of the given sizes.
fn multinomial(n: usize, sizes: &[usize]) -> u128 {
    let mut left = n;
    let mut acc: u128 = 1;
    for &s in sizes {
        acc = acc.saturating_mul(binomial(left, s));
        left -= s;
    }
    acc
}

/// Run lengths of a non-increasing capacity sequence.
fn multiplicities(caps: &[usize]) -> Vec<usize> {
    caps.chunk_by(|a, b| a == b).map(<[usize]>::len).collect()
}

/// Number of candidates the oracle would examine.
pub fn oracle_estimate(rows: usize, cols: usize, p: usize) -> Result<u128> {
    let row_caps = partition_capacities(rows, p)?;
    let col_caps = partition_capacities(cols, p)?;
    let row_symmetry = multiplicities(&row_caps)
        .into_iter()
        .fold(1u128, |acc, m| acc.saturating_mul(factorial(m)));
    let col_orders = multiplicities(&col_caps)
        .into_iter()
        .fold(factorial(p), |acc, m| acc / factorial(m));
    Ok((multinomial(rows, &row_caps) / row_symmetry)
        .saturating_mul(col_orders)
        .saturating_mul(multinomial(cols, &col_caps)))
}

/// Every distinct ordering of a multiset, lexicographic from ascending.
fn distinct_orders(caps: &[usize]) -> Vec<Vec<usize>> {
    let mut cur = caps.to_vec();
    cur.sort_unstable();
    let mut out = vec![cur.clone()];
    while let Some(i) = (0..cur.len().saturating_sub(1)).rev().find(|&i| cur[i] < cur[i + 1]) {
        let j = (i + 1..cur.len()).rev().find(|&j| cur[j] > cur[i]).unwrap();
        cur.swap(i, j);
        cur[i + 1..].reverse();
        out.push(cur.clone());
    }
    out
}

struct Splitter<'a> {
    sizes: &'a [usize],
    canonical: bool,
    filled: Vec<usize>,
    labels: Vec<usize>,
}

impl<'a> Splitter<'a> {
    fn new(n: usize, sizes: &'a [usize], canonical: bool) -> Self {
        Self { sizes, canonical, filled: vec![0; sizes.len()], labels: vec![0; n] }
    }

    fn run(&mut self, f: &mut dyn FnMut(&[usize])) {
        self.visit(0, f);
    }

    fn visit(&mut self, i: usize, f: &mut dyn FnMut(&[usize])) {
        if i == self.labels.len() {
            f(&self.labels);
            return;
        }
        for g in 0..self.sizes.len() {
            if self.filled[g] == self.sizes[g] {
                continue;
            }
            // An empty group may only open after its equal-sized predecessor.
            if self.canonical
                && self.filled[g] == 0
                && g > 0
                && self.sizes[g - 1] == self.sizes[g]
                && self.filled[g - 1] == 0
            {
                continue;
            }
            self.labels[i] = g;
            self.filled[g] += 1;
            self.visit(i + 1, f);
            self.filled[g] -= 1;
        }
    }
}

/// Exact minimum weight-loss over all balanced assignments.
///
/// Fails with [`Error::BudgetExceeded`] before doing any work when the
/// candidate count exceeds `budget`. Losses use the same row-major
/// accumulation as [`crate::layer::weight_loss`], so comparisons against
/// heuristic results are exact.
pub fn brute_force_partition(weights: &WeightMatrix, p: usize, budget: u128) -> Result<OracleResult> {
    check_partition_count(weights, p)?;
    let (rows, cols) = (weights.rows(), weights.cols());
    let estimate = oracle_estimate(rows, cols, p)?;
    if estimate > budget {
        return Err(Error::BudgetExceeded { estimate, budget });
    }
    let row_caps = partition_capacities(rows, p)?;
    let col_orders = distinct_orders(&partition_capacities(cols, p)?);

    let mut best_loss = f64::INFINITY;
    let mut best: Option<(Vec<usize>, Vec<usize>)> = None;
    let mut enumerated: u128 = 0;

    Splitter::new(rows, &row_caps, true).run(&mut |row_of| {
        for sizes in &col_orders {
            Splitter::new(cols, sizes, false).run(&mut |col_of| {
                enumerated += 1;
                let loss = abs_sums(weights, |i, j| row_of[i] == col_of[j]).0;
                if loss < best_loss {
                    best_loss = loss;
                    best = Some((row_of.to_vec(), col_of.to_vec()));
                }
            });
        }
    });

    let (row_of, col_of) = best.expect("at least one candidate exists");
    Ok(OracleResult {
        optimum_loss: best_loss,
        optimum_assignment: PartitionAssignment { p, row_of, col_of },
        enumerated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layer::validate_assignment;

    #[test]
    fn two_by_two_examples() {
        let diag = WeightMatrix::from_rows(&[vec![5.0, 0.0], vec![0.0, 5.0]]).unwrap();
        let r = brute_force_partition(&diag, 2, DEFAULT_BUDGET).unwrap();
        assert_eq!(r.optimum_loss, 0.0);
        assert_eq!(r.optimum_assignment.row_of, vec![0, 1]);
        assert_eq!(r.optimum_assignment.col_of, vec![0, 1]);

        // pairings: diag keeps 4+1, anti-diag keeps 3+2; both lose 5
        let w = WeightMatrix::from_rows(&[vec![4.0, 3.0], vec![2.0, 1.0]]).unwrap();
        let r = brute_force_partition(&w, 2, DEFAULT_BUDGET).unwrap();
        assert_eq!(r.optimum_loss, 5.0);
        assert_eq!(r.enumerated, 2);
    }

    #[test]
    fn estimate_matches_enumeration() {
        let w = WeightMatrix::new(7, 8, (0..56).map(|v| (v % 5) as f64).collect()).unwrap();
        for p in 1..=4 {
            let r = brute_force_partition(&w, p, DEFAULT_BUDGET).unwrap();
            assert_eq!(r.enumerated, oracle_estimate(7, 8, p).unwrap(), "p = {p}");
            assert_eq!(validate_assignment(&r.optimum_assignment, 7, 8), Ok(()));
        }
    }

    #[test]
    fn estimate_values() {
        // 8x8, p = 3: 8!/(3!3!2!) / 2! row splits, 3 column orders, 560 column splits
        assert_eq!(oracle_estimate(8, 8, 3).unwrap(), 280 * 3 * 560);
        assert_eq!(oracle_estimate(6, 6, 2).unwrap(), 10 * 20);
        assert_eq!(oracle_estimate(4, 4, 1).unwrap(), 1);
    }

    #[test]
    fn over_budget() {
        let w = WeightMatrix::new(12, 12, vec![1.0; 144]).unwrap();
        match brute_force_partition(&w, 3, 1000) {
            Err(Error::BudgetExceeded { estimate, budget }) => {
                assert_eq!(budget, 1000);
                assert!(estimate > 1000);
            }
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    #[test]
    fn orders_of_multiset() {
        assert_eq!(distinct_orders(&[2, 1, 1]), vec![vec![1, 1, 2], vec![1, 2, 1], vec![2, 1, 1]]);
        assert_eq!(distinct_orders(&[3, 3]).len(), 1);
        assert_eq!(distinct_orders(&[3, 2, 1]).len(), 6);
    }
}
