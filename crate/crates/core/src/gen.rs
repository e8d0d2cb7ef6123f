//! Synthetic layers for experiments and tests.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::io::round_to_f32;
use crate::layer::{partition_capacities, PartitionAssignment, WeightMatrix};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Distribution {
    /// Uniform on `[-1, 1)`.
    Uniform,
    /// Standard normal.
    Gauss,
    /// Block-diagonal support over `p` contiguous balanced blocks; on-block
    /// magnitudes are uniform on `[0.5, 1.5)` with random sign, off-block
    /// entries are exactly zero.
    BlockDiag(usize),
}

impl FromStr for Distribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Self::Uniform),
            "gauss" => Ok(Self::Gauss),
            _ => s
                .strip_prefix("blockdiag:")
                .and_then(|p| p.parse().ok())
                .map(Self::BlockDiag)
                .ok_or_else(|| Error::Format(format!("unknown distribution {s:?} (uniform, gauss, blockdiag:P)"))),
        }
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Uniform => f.write_str("uniform"),
            Self::Gauss => f.write_str("gauss"),
            Self::BlockDiag(p) => write!(f, "blockdiag:{p}"),
        }
    }
}

/// Contiguous blocks: block `k` owns the `k`-th run of rows and columns, both
/// sized by [`partition_capacities`].
pub fn planted_assignment(rows: usize, cols: usize, p: usize) -> Result<PartitionAssignment> {
    let label = |n: usize| -> Result<Vec<usize>> {
        Ok(partition_capacities(n, p)?
            .into_iter()
            .enumerate()
            .flat_map(|(k, size)| std::iter::repeat_n(k, size))
            .collect())
    };
    Ok(PartitionAssignment { p, row_of: label(rows)?, col_of: label(cols)? })
}

/// A `rows x cols` matrix of FP-32 representable values.
pub fn generate(rows: usize, cols: usize, dist: Distribution, seed: u64) -> Result<WeightMatrix> {
    if rows == 0 || cols == 0 {
        return Err(Error::DegenerateLayer { rows, cols });
    }
    let mut rng = SplitMix64::new(seed);
    let values = match dist {
        Distribution::Uniform => (0..rows * cols).map(|_| 2.0 * rng.next_f64() - 1.0).collect(),
        Distribution::Gauss => (0..rows * cols).map(|_| rng.next_gauss()).collect(),
        Distribution::BlockDiag(p) => {
            if p == 0 {
                return Err(Error::ZeroPartitions);
            }
            if p > rows.min(cols) {
                return Err(Error::TooManyPartitions { p, n: rows.min(cols) });
            }
            let a = planted_assignment(rows, cols, p)?;
            let mut v = Vec::with_capacity(rows * cols);
            for i in 0..rows {
                for j in 0..cols {
                    v.push(if a.row_of[i] == a.col_of[j] {
                        let magnitude = 0.5 + rng.next_f64();
                        if rng.next_u64() & 1 == 0 { magnitude } else { -magnitude }
                    } else {
                        0.0
                    });
                }
            }
            v
        }
    };
    WeightMatrix::new(rows, cols, values.into_iter().map(round_to_f32).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_distributions() {
        assert_eq!("uniform".parse::<Distribution>().unwrap(), Distribution::Uniform);
        assert_eq!("gauss".parse::<Distribution>().unwrap(), Distribution::Gauss);
        assert_eq!("blockdiag:3".parse::<Distribution>().unwrap(), Distribution::BlockDiag(3));
        assert!("blockdiag:x".parse::<Distribution>().is_err());
        assert!("cauchy".parse::<Distribution>().is_err());
        assert_eq!(Distribution::BlockDiag(4).to_string(), "blockdiag:4");
    }

    #[test]
    fn blockdiag_support() {
        let w = generate(8, 8, Distribution::BlockDiag(2), 1).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                let on = (i < 4) == (j < 4);
                assert_eq!(w.get(i, j) != 0.0, on, "({i}, {j})");
                if on {
                    assert!((0.5..1.5).contains(&w.get(i, j).abs()));
                }
            }
        }
        assert!(generate(3, 8, Distribution::BlockDiag(4), 1).is_err());
    }

    #[test]
    fn deterministic_and_fp32() {
        for dist in [Distribution::Uniform, Distribution::Gauss, Distribution::BlockDiag(3)] {
            let a = generate(6, 9, dist, 77).unwrap();
            assert_eq!(a, generate(6, 9, dist, 77).unwrap());
            assert_ne!(a, generate(6, 9, dist, 78).unwrap());
            assert!(a.values().iter().all(|&v| round_to_f32(v) == v));
        }
    }

    #[test]
    fn planted_labels() {
        let a = planted_assignment(7, 10, 3).unwrap();
        assert_eq!(a.row_of, vec![0, 0, 0, 1, 1, 2, 2]);
        assert_eq!(a.col_of, vec![0, 0, 0, 0, 1, 1, 1, 2, 2, 2]);
    }
}
