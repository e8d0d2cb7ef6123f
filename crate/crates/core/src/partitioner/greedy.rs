use std::cmp::Ordering;

use crate::error::Result;
use crate::layer::{partition_capacities, PartitionAssignment, PruneResult, WeightMatrix};
use crate::rng::SplitMix64;

use super::check_partition_count;

#[derive(Debug, Clone)]
struct FoundedPartition {
    /// Frozen at founding, ascending.
    cols: Vec<usize>,
    members: Vec<usize>,
    row_capacity: usize,
}

impl FoundedPartition {
    fn has_room(&self) -> bool {
        self.members.len() < self.row_capacity
    }
}

enum Choice {
    Join(usize),
    Found(Vec<usize>),
}

/// Construction state of one greedy pass.
#[derive(Debug, Clone)]
pub(crate) struct GreedyState {
    founded: Vec<FoundedPartition>,
    row_caps: Vec<usize>,
    col_caps: Vec<usize>,
    unassigned_rows: usize,
    col_free: Vec<bool>,
    rng: SplitMix64,
}

impl GreedyState {
    fn new(weights: &WeightMatrix, p: usize, seed: u64) -> Result<Self> {
        Ok(Self {
            founded: Vec::with_capacity(p),
            row_caps: partition_capacities(weights.rows(), p)?,
            col_caps: partition_capacities(weights.cols(), p)?,
            unassigned_rows: weights.rows(),
            col_free: vec![true; weights.cols()],
            rng: SplitMix64::new(seed),
        })
    }

    fn unfounded(&self) -> usize {
        self.row_caps.len() - self.founded.len()
    }

    /// The `k` free columns with the largest `|w|` in `row`, lowest index
    /// first among equal magnitudes. Returned in ascending column order.
    fn top_free_columns(&self, row: &[f64], k: usize) -> Vec<usize> {
        let mut free: Vec<usize> = (0..row.len()).filter(|&j| self.col_free[j]).collect();
        free.sort_by(|&a, &b| row[b].abs().total_cmp(&row[a].abs()).then(a.cmp(&b)));
        free.truncate(k);
        free.sort_unstable();
        free
    }

    fn place(&mut self, weights: &WeightMatrix, row: usize) {
        let values = weights.row(row);
        let forced = self.unassigned_rows == self.unfounded();
        let mut best: Option<(f64, Choice)> = None;
        let better = |score: f64, best: &Option<(f64, Choice)>| match best {
            None => true,
            Some((s, _)) => score.total_cmp(s) == Ordering::Greater,
        };

        if !forced {
            for (k, part) in self.founded.iter().enumerate() {
                if !part.has_room() {
                    continue;
                }
                let score: f64 = part.cols.iter().map(|&j| values[j].abs()).sum();
                if better(score, &best) {
                    best = Some((score, Choice::Join(k)));
                }
            }
        }
        if self.unfounded() > 0 {
            let cols = self.top_free_columns(values, self.col_caps[self.founded.len()]);
            let score: f64 = cols.iter().map(|&j| values[j].abs()).sum();
            if better(score, &best) {
                best = Some((score, Choice::Found(cols)));
            }
        }

        match best.expect("row capacity exhausted before all rows were placed").1 {
            Choice::Join(k) => self.founded[k].members.push(row),
            Choice::Found(cols) => {
                for &j in &cols {
                    self.col_free[j] = false;
                }
                let row_capacity = self.row_caps[self.founded.len()];
                self.founded.push(FoundedPartition { cols, members: vec![row], row_capacity });
            }
        }
        self.unassigned_rows -= 1;
    }

    fn into_assignment(self, rows: usize, cols: usize) -> PartitionAssignment {
        let p = self.row_caps.len();
        let mut row_of = vec![usize::MAX; rows];
        let mut col_of = vec![usize::MAX; cols];
        for (k, part) in self.founded.iter().enumerate() {
            for &i in &part.members {
                row_of[i] = k;
            }
            for &j in &part.cols {
                col_of[j] = k;
            }
        }
        debug_assert!(row_of.iter().chain(&col_of).all(|&l| l < p));
        PartitionAssignment { p, row_of, col_of }
    }
}

/// One randomized greedy construction.
///
/// Rows are visited in a seeded random order. The first row founds
/// partition 0 with its largest-magnitude columns; every later row either
/// joins a founded partition with spare row capacity (score: its magnitude
/// over that partition's columns) or founds the next partition (score: its
/// top free columns), whichever scores highest. Founding is forced once
/// the remaining rows are just enough to found the remaining partitions.
/// Partitions consume the row and column capacity sequences largest first.
pub fn greedy_partition(weights: &WeightMatrix, p: usize, seed: u64) -> Result<PruneResult> {
    check_partition_count(weights, p)?;
    let mut state = GreedyState::new(weights, p, seed)?;
    let order = state.rng.permutation(weights.rows());
    for row in order {
        state.place(weights, row);
    }
    debug_assert_eq!(state.founded.len(), p);
    let assignment = state.into_assignment(weights.rows(), weights.cols());
    PruneResult::from_assignment(weights, assignment, seed, 1)
}
