//! Balanced partition pruning search: the randomized greedy constructor,
//! best-of-N restarts, swap refinement, and an exhaustive oracle for small
//! instances.

mod greedy;
mod oracle;
mod refine;

use rayon::prelude::*;

pub use greedy::greedy_partition;
pub use oracle::{brute_force_partition, oracle_estimate, OracleResult, DEFAULT_BUDGET};
pub use refine::refine_swaps;

use crate::error::{Error, Result};
use crate::layer::{PruneResult, WeightMatrix};
use crate::rng::SplitMix64;

pub const DEFAULT_RESTARTS: usize = 32;

pub(crate) fn check_partition_count(weights: &WeightMatrix, p: usize) -> Result<()> {
    if p == 0 {
        return Err(Error::ZeroPartitions);
    }
    let n = weights.rows().min(weights.cols());
    if p > n {
        return Err(Error::TooManyPartitions { p, n });
    }
    Ok(())
}

/// Per-restart seeds: the first `restarts` outputs of SplitMix64 seeded
/// with `seed`.
pub fn restart_seeds(seed: u64, restarts: usize) -> Vec<u64> {
    let mut stream = SplitMix64::new(seed);
    (0..restarts).map(|_| stream.next_u64()).collect()
}

/// Runs `restarts` independent greedy constructions and keeps the lowest
/// weight-loss, earliest restart on ties. Restarts run in parallel; the
/// result does not depend on scheduling.
pub fn multi_restart(weights: &WeightMatrix, p: usize, restarts: usize, seed: u64) -> Result<PruneResult> {
    check_partition_count(weights, p)?;
    if restarts == 0 {
        return Err(Error::InvalidConfig("restarts must be at least 1".into()));
    }
    let results = restart_seeds(seed, restarts)
        .into_par_iter()
        .map(|s| greedy_partition(weights, p, s))
        .collect::<Result<Vec<_>>>()?;

    let mut best = results
        .into_iter()
        .reduce(|best, r| if r.weight_loss < best.weight_loss { r } else { best })
        .expect("restarts >= 1");
    best.seed = seed;
    best.restarts = restarts;
    Ok(best)
}
