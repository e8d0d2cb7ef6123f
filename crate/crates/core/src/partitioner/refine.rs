use crate::error::{Error, Result};
use crate::layer::{validate_assignment, PartitionAssignment, PruneResult, WeightMatrix};

/// Gain of moving each node into each partition: for rows, the magnitude a
/// row keeps over partition `k`'s columns; for columns, over its rows.
fn gains(weights: &WeightMatrix, a: &PartitionAssignment, rows_side: bool) -> Vec<Vec<f64>> {
    if rows_side {
        (0..weights.rows())
            .map(|i| {
                let mut g = vec![0.0; a.p];
                for (j, &k) in a.col_of.iter().enumerate() {
                    g[k] += weights.get(i, j).abs();
                }
                g
            })
            .collect()
    } else {
        let mut g = vec![vec![0.0; a.p]; weights.cols()];
        for (i, &k) in a.row_of.iter().enumerate() {
            for (j, gj) in g.iter_mut().enumerate() {
                gj[k] += weights.get(i, j).abs();
            }
        }
        g
    }
}

/// Best improving exchange of two same-side nodes in different partitions.
fn best_swap(labels: &[usize], gain: &[Vec<f64>]) -> Option<(f64, usize, usize)> {
    let mut best: Option<(f64, usize, usize)> = None;
    for a in 0..labels.len() {
        for b in a + 1..labels.len() {
            let (x, y) = (labels[a], labels[b]);
            if x == y {
                continue;
            }
            let delta = gain[a][y] + gain[b][x] - gain[a][x] - gain[b][y];
            if delta > 0.0 && best.is_none_or(|(d, _, _)| delta > d) {
                best = Some((delta, a, b));
            }
        }
    }
    best
}

/// Local search over row swaps and column swaps between partitions.
///
/// Each pass applies the single most improving swap (rows and columns
/// compete; rows win ties). Group sizes never change, so feasibility is
/// preserved. A swap is kept only if the recomputed weight-loss strictly
/// drops, which makes the output loss never exceed the input loss.
pub fn refine_swaps(weights: &WeightMatrix, result: &PruneResult, max_passes: usize) -> Result<PruneResult> {
    validate_assignment(&result.assignment, weights.rows(), weights.cols()).map_err(Error::Infeasible)?;
    let mut current = PruneResult::from_assignment(
        weights,
        result.assignment.clone(),
        result.seed,
        result.restarts,
    )?;

    for _ in 0..max_passes {
        let a = &current.assignment;
        let row_move = best_swap(&a.row_of, &gains(weights, a, true));
        let col_move = best_swap(&a.col_of, &gains(weights, a, false));
        let mut next = a.clone();
        match (row_move, col_move) {
            (Some((dr, i, k)), Some((dc, _, _))) if dr >= dc => next.row_of.swap(i, k),
            (_, Some((_, i, k))) => next.col_of.swap(i, k),
            (Some((_, i, k)), None) => next.row_of.swap(i, k),
            (None, None) => break,
        }
        let candidate = PruneResult::from_assignment(weights, next, current.seed, current.restarts)?;
        if candidate.weight_loss >= current.weight_loss {
            break;
        }
        current = candidate;
    }
    Ok(current)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partitioner::{brute_force_partition, greedy_partition};
    use crate::rng::SplitMix64;

    fn planted(n: usize, p: usize) -> WeightMatrix {
        let mut v = vec![0.0; n * n];
        let b = n / p;
        for i in 0..n {
            for j in 0..n {
                if i / b == j / b {
                    v[i * n + j] = 1.0 + (i * n + j) as f64 * 0.01;
                }
            }
        }
        WeightMatrix::new(n, n, v).unwrap()
    }

    #[test]
    fn restores_swapped_rows() {
        let w = planted(8, 2);
        let mut a = PartitionAssignment {
            p: 2,
            row_of: vec![0, 0, 0, 0, 1, 1, 1, 1],
            col_of: vec![0, 0, 0, 0, 1, 1, 1, 1],
        };
        a.row_of.swap(1, 6);
        let broken = PruneResult::from_assignment(&w, a, 0, 1).unwrap();
        assert!(broken.weight_loss > 0.0);
        let fixed = refine_swaps(&w, &broken, 100).unwrap();
        assert_eq!(fixed.weight_loss, 0.0);
    }

    #[test]
    fn optimum_is_a_fixed_point() {
        let mut rng = SplitMix64::new(21);
        let w = WeightMatrix::new(6, 6, (0..36).map(|_| rng.next_gauss()).collect()).unwrap();
        let opt = brute_force_partition(&w, 2, 1_000_000).unwrap();
        let start = PruneResult::from_assignment(&w, opt.optimum_assignment.clone(), 0, 1).unwrap();
        let out = refine_swaps(&w, &start, 50).unwrap();
        assert_eq!(out.assignment, opt.optimum_assignment);
        assert_eq!(out.weight_loss, opt.optimum_loss);
    }

    #[test]
    fn never_worse() {
        let mut rng = SplitMix64::new(8);
        for seed in 0..30 {
            let w = WeightMatrix::new(8, 8, (0..64).map(|_| rng.next_gauss()).collect()).unwrap();
            let g = greedy_partition(&w, 2, seed).unwrap();
            let r = refine_swaps(&w, &g, 100).unwrap();
            assert!(r.weight_loss <= g.weight_loss);
            assert_eq!(validate_assignment(&r.assignment, 8, 8), Ok(()));
        }
    }

    #[test]
    fn zero_passes_is_identity() {
        let w = planted(6, 3);
        let g = greedy_partition(&w, 3, 1).unwrap();
        assert_eq!(refine_swaps(&w, &g, 0).unwrap(), g);
    }

    #[test]
    fn rejects_infeasible_input() {
        let w = planted(4, 2);
        let a = PartitionAssignment { p: 2, row_of: vec![0, 0, 0, 1], col_of: vec![0, 0, 1, 1] };
        let bad = PruneResult::from_assignment(&w, a, 0, 1).unwrap();
        assert!(matches!(refine_swaps(&w, &bad, 5), Err(Error::Infeasible(_))));
    }
}
