//! Performance and energy model of several systolic-array accelerators that
//! share one bus and one DMA engine.
//!
//! Every job moves its inputs and weights over the bus before computing.
//! The bus serves one transfer at a time, first come first served, and a
//! transfer slows down linearly with the number of requests still waiting
//! when it is granted. Compute time follows an output-stationary systolic
//! pipeline: `ceil(M/s) * ceil(N/s)` tiles of `K + 2s - 2` cycles each.

mod calibrate;
mod sim;

use serde::{Deserialize, Serialize};

pub use calibrate::{calibrate, scaling_speedup, Calibration, CalibrationTarget, MAX_REL_ERR};
pub use sim::simulate;

use crate::error::{Error, Result};
use crate::layer::partition_capacities;

/// Stand-in layer used when no dimensions are given: a 4096x4096
/// fully-connected layer fed a batch of 1024 inputs.
pub const REFERENCE_SHAPE: JobShape = JobShape { m: 1024, k: 4096, n: 4096 };

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub num_accelerators: usize,
    pub accel_clock_hz: f64,
    pub sa_dim: usize,
    pub bytes_per_element: usize,
    /// Bytes per accelerator clock cycle.
    pub bus_bandwidth_bytes_per_cycle: f64,
    pub dma_fixed_overhead_cycles: f64,
    /// Service-time multiplier per request still waiting at grant.
    pub contention_overhead: f64,
    pub e_mac_pj: f64,
    pub e_dram_byte_pj: f64,
    /// Static power per accelerator that runs at least one job.
    pub p_static_mw: f64,
}

impl Default for SimConfig {
    /// 200 MHz accelerators with 32x32 arrays and FP-32 data. The bus is a
    /// 64-bit DDR3-1600 channel (12.8 GB/s, 64 B per accelerator cycle).
    /// Energy constants are placeholders, not measured values.
    fn default() -> Self {
        Self {
            num_accelerators: 1,
            accel_clock_hz: 200e6,
            sa_dim: 32,
            bytes_per_element: 4,
            bus_bandwidth_bytes_per_cycle: 64.0,
            dma_fixed_overhead_cycles: 0.0,
            contention_overhead: 0.0,
            e_mac_pj: 4.6,
            e_dram_byte_pj: 20.0,
            p_static_mw: 50.0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidConfig(what.to_string()));
        if self.num_accelerators == 0 {
            return bad("num_accelerators must be at least 1");
        }
        if self.sa_dim == 0 {
            return bad("sa_dim must be at least 1");
        }
        if self.bytes_per_element == 0 {
            return bad("bytes_per_element must be at least 1");
        }
        let positive = [
            ("accel_clock_hz", self.accel_clock_hz),
            ("bus_bandwidth_bytes_per_cycle", self.bus_bandwidth_bytes_per_cycle),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return bad(&format!("{name} must be positive and finite, got {v}"));
            }
        }
        let non_negative = [
            ("dma_fixed_overhead_cycles", self.dma_fixed_overhead_cycles),
            ("contention_overhead", self.contention_overhead),
            ("e_mac_pj", self.e_mac_pj),
            ("e_dram_byte_pj", self.e_dram_byte_pj),
            ("p_static_mw", self.p_static_mw),
        ];
        for (name, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return bad(&format!("{name} must be non-negative and finite, got {v}"));
            }
        }
        Ok(())
    }

    pub fn with_accelerators(&self, n: usize) -> Self {
        Self { num_accelerators: n, ..self.clone() }
    }
}

/// An `M x K` by `K x N` product.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct JobShape {
    pub m: usize,
    pub k: usize,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Job {
    pub accelerator: usize,
    #[serde(flatten)]
    pub shape: JobShape,
}

impl Job {
    pub fn new(accelerator: usize, m: usize, k: usize, n: usize) -> Self {
        Self { accelerator, shape: JobShape { m, k, n } }
    }

    /// Inputs plus weights moved over the bus.
    pub fn bytes(&self, bytes_per_element: usize) -> u64 {
        let JobShape { m, k, n } = self.shape;
        ((m * k + k * n) * bytes_per_element) as u64
    }

    pub fn macs(&self) -> u64 {
        let JobShape { m, k, n } = self.shape;
        (m * k * n) as u64
    }
}

/// Jobs in issue order; jobs on the same accelerator run one after another.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Workload {
    pub jobs: Vec<Job>,
}

impl Workload {
    /// One copy of `shape` on each of accelerators `0..copies`.
    pub fn identical(shape: JobShape, copies: usize) -> Self {
        Self { jobs: (0..copies).map(|a| Job { accelerator: a, shape }).collect() }
    }

    /// `copies` back-to-back runs of `shape` on accelerator 0.
    pub fn serial(shape: JobShape, copies: usize) -> Self {
        Self { jobs: vec![Job { accelerator: 0, shape }; copies] }
    }

    /// Unpruned `rows x cols` layer on one accelerator.
    pub fn dense(batch: usize, rows: usize, cols: usize) -> Self {
        Self { jobs: vec![Job::new(0, batch, rows, cols)] }
    }

    /// The `p` blocks of a balanced partition of a `rows x cols` layer, block
    /// `k` on accelerator `k`.
    pub fn partitioned(batch: usize, rows: usize, cols: usize, p: usize) -> Result<Self> {
        let rc = partition_capacities(rows, p)?;
        let cc = partition_capacities(cols, p)?;
        Ok(Self::from_block_shapes(batch, rc.into_iter().zip(cc)))
    }

    /// One job per `(rows, cols)` block, block `k` on accelerator `k`.
    pub fn from_block_shapes(batch: usize, shapes: impl IntoIterator<Item = (usize, usize)>) -> Self {
        Self {
            jobs: shapes
                .into_iter()
                .enumerate()
                .map(|(a, (r, c))| Job::new(a, batch, r, c))
                .collect(),
        }
    }

    pub fn validate(&self, config: &SimConfig) -> Result<()> {
        for (idx, job) in self.jobs.iter().enumerate() {
            if job.accelerator >= config.num_accelerators {
                return Err(Error::InvalidConfig(format!(
                    "job {idx} targets accelerator {} of {}",
                    job.accelerator, config.num_accelerators
                )));
            }
            let JobShape { m, k, n } = job.shape;
            if m == 0 || k == 0 || n == 0 {
                return Err(Error::InvalidConfig(format!("job {idx} has an empty dimension")));
            }
        }
        Ok(())
    }
}

/// Cycles for an `M x K` by `K x N` product on an `s x s` output-stationary
/// array: one `K + 2s - 2` cycle pass (fill, `K` beats, drain) per output tile.
pub fn sa_matmul_cycles(m: usize, k: usize, n: usize, s: usize) -> u64 {
    (m.div_ceil(s) * n.div_ceil(s)) as u64 * (k + 2 * s - 2) as u64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobTiming {
    pub accelerator: usize,
    #[serde(flatten)]
    pub shape: JobShape,
    pub bytes: u64,
    pub request_cycle: f64,
    pub grant_cycle: f64,
    /// Other requests waiting when this transfer started.
    pub queue_at_grant: usize,
    pub transfer_done_cycle: f64,
    pub compute_done_cycle: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub accel_busy_cycles: Vec<u64>,
    pub bus_busy_cycles: f64,
    pub makespan_cycles: f64,
    pub makespan_seconds: f64,
    pub compute_energy_pj: f64,
    pub transfer_energy_pj: f64,
    pub static_energy_pj: f64,
    pub total_energy_pj: f64,
    pub speedup: Option<f64>,
    pub energy_ratio: Option<f64>,
    pub jobs: Vec<JobTiming>,
}

impl SimReport {
    /// Fills `speedup` (baseline makespan over ours) and `energy_ratio`
    /// (our energy over baseline's; below 1 means we use less).
    pub fn against(mut self, baseline: &SimReport) -> Self {
        self.speedup = Some(baseline.makespan_cycles / self.makespan_cycles);
        self.energy_ratio = Some(self.total_energy_pj / baseline.total_energy_pj);
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Cycle count by walking the output tiles one by one.
    fn tile_walk(m: usize, k: usize, n: usize, s: usize) -> u64 {
        let mut cycles = 0;
        let mut row = 0;
        while row < m {
            let mut col = 0;
            while col < n {
                cycles += (s - 1) + k + (s - 1);
                col += s;
            }
            row += s;
        }
        cycles as u64
    }

    #[test]
    fn cycle_examples() {
        assert_eq!(sa_matmul_cycles(32, 32, 32, 32), 94);
        assert_eq!(sa_matmul_cycles(64, 32, 64, 32), 376);
        assert_eq!(sa_matmul_cycles(1, 1, 1, 1), 1);
        for &(m, k, n) in &[(4096, 4096, 1), (2048, 2048, 1), (100, 7, 33), (4096, 4096, 4096)] {
            assert_eq!(sa_matmul_cycles(m, k, n, 32), tile_walk(m, k, n, 32));
        }
    }

    #[test]
    fn halving_dims() {
        let full = sa_matmul_cycles(4096, 4096, 4096, 32) as f64;
        let half = sa_matmul_cycles(2048, 2048, 2048, 32) as f64;
        // 128*128*4158 / (64*64*2110)
        assert!((full / half - 68_124_672.0 / 8_642_560.0).abs() < 1e-12);
        assert!((full / half - 8.0).abs() < 0.15);
        let thin = sa_matmul_cycles(4096, 4096, 1, 32) as f64 / sa_matmul_cycles(2048, 2048, 1, 32) as f64;
        assert!((thin - 532_224.0 / 135_040.0).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        assert!(SimConfig::default().validate().is_ok());
        let bad = [
            SimConfig { bus_bandwidth_bytes_per_cycle: 0.0, ..SimConfig::default() },
            SimConfig { contention_overhead: -0.1, ..SimConfig::default() },
            SimConfig { sa_dim: 0, ..SimConfig::default() },
            SimConfig { e_mac_pj: f64::NAN, ..SimConfig::default() },
        ];
        for c in bad {
            assert!(c.validate().is_err(), "{c:?}");
        }
    }

    #[test]
    fn partitioned_workload_shapes() {
        let w = Workload::partitioned(8, 7, 10, 3).unwrap();
        let shapes: Vec<_> = w.jobs.iter().map(|j| (j.accelerator, j.shape.k, j.shape.n)).collect();
        assert_eq!(shapes, vec![(0, 3, 4), (1, 2, 3), (2, 2, 3)]);
        let bad = Workload::identical(REFERENCE_SHAPE, 2);
        assert!(bad.validate(&SimConfig::default()).is_err());
    }
}
