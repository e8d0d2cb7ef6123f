//! Fitting the bus parameters to observed multi-accelerator scaling.
//!
//! The scaling experiment runs `k` identical jobs on `k` accelerators and
//! compares against the same `k` jobs run back to back on one accelerator.
//! The free parameters are `contention_overhead` and
//! `dma_fixed_overhead_cycles`; everything else in the config is held.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{simulate, JobShape, SimConfig, Workload};

/// Acceptable worst relative error of a fit.
pub const MAX_REL_ERR: f64 = 0.03;

const CONTENTION_MAX: f64 = 4.0;
const CONTENTION_GRID: usize = 80;
const GOLDEN_ITERS: usize = 90;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationTarget {
    pub accelerators: usize,
    pub speedup: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub config: SimConfig,
    /// (accelerators, target, achieved) per target.
    pub achieved: Vec<(usize, f64, f64)>,
    pub max_rel_err: f64,
}

/// Throughput gain of `k` parallel copies over `k` serial copies.
pub fn scaling_speedup(config: &SimConfig, shape: JobShape, k: usize) -> Result<f64> {
    let parallel = simulate(&config.with_accelerators(k), &Workload::identical(shape, k))?;
    let serial = simulate(&config.with_accelerators(1), &Workload::serial(shape, k))?;
    Ok(serial.makespan_cycles / parallel.makespan_cycles)
}

fn with_params(base: &SimConfig, contention: f64, fixed: f64) -> SimConfig {
    SimConfig { contention_overhead: contention, dma_fixed_overhead_cycles: fixed, ..base.clone() }
}

fn max_rel_err(config: &SimConfig, shape: JobShape, targets: &[CalibrationTarget]) -> Result<f64> {
    targets.iter().try_fold(0.0f64, |worst, t| {
        let s = scaling_speedup(config, shape, t.accelerators)?;
        Ok(worst.max((s - t.speedup).abs() / t.speedup))
    })
}

/// Golden-section minimum of a unimodal `f` on `[lo, hi]`; the endpoint
/// `lo` is also evaluated since optima often sit on the boundary.
fn golden_min(lo: f64, hi: f64, mut f: impl FnMut(f64) -> Result<f64>) -> Result<(f64, f64)> {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let (mut f1, mut f2) = (f(x1)?, f(x2)?);
    for _ in 0..GOLDEN_ITERS {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2)?;
        }
    }
    let (mut x, mut fx) = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    let f_lo = f(lo)?;
    if f_lo <= fx {
        (x, fx) = (lo, f_lo);
    }
    Ok((x, fx))
}

/// Fits `contention_overhead` and `dma_fixed_overhead_cycles` so that the
/// scaling experiment on `shape` reproduces `targets`.
///
/// Contention is scanned on a grid and then refined by golden-section
/// search around the best grid point; for every contention value the fixed
/// overhead is chosen by golden-section search. The objective is the worst
/// relative error over all targets. Returns
/// [`Error::CalibrationUnreached`] carrying the best config when that error
/// stays above [`MAX_REL_ERR`].
pub fn calibrate(config: &SimConfig, shape: JobShape, targets: &[CalibrationTarget]) -> Result<Calibration> {
    config.validate()?;
    if targets.is_empty() {
        return Err(Error::InvalidConfig("at least one calibration target is required".into()));
    }
    if let Some(t) = targets.iter().find(|t| t.accelerators == 0 || !(t.speedup.is_finite() && t.speedup > 0.0)) {
        return Err(Error::InvalidConfig(format!(
            "bad target: {} accelerators, speedup {}",
            t.accelerators, t.speedup
        )));
    }

    // Upper end of the fixed-overhead search: ten single-job makespans.
    let single = simulate(&with_params(config, 0.0, 0.0), &Workload::serial(shape, 1))?;
    let fixed_max = 10.0 * single.makespan_cycles;

    let best_fixed = |contention: f64| -> Result<(f64, f64)> {
        golden_min(0.0, fixed_max, |fixed| {
            max_rel_err(&with_params(config, contention, fixed), shape, targets)
        })
    };

    let step = CONTENTION_MAX / CONTENTION_GRID as f64;
    let mut best = (0.0, 0.0, f64::INFINITY);
    for i in 0..=CONTENTION_GRID {
        let c = i as f64 * step;
        let (fixed, err) = best_fixed(c)?;
        if err < best.2 {
            best = (c, fixed, err);
        }
    }

    let lo = (best.0 - step).max(0.0);
    let hi = (best.0 + step).min(CONTENTION_MAX);
    let (c, _) = golden_min(lo, hi, |c| best_fixed(c).map(|(_, err)| err))?;
    let (fixed, err) = best_fixed(c)?;
    if err < best.2 {
        best = (c, fixed, err);
    }

    let fitted = with_params(config, best.0, best.1);
    let achieved = targets
        .iter()
        .map(|t| Ok((t.accelerators, t.speedup, scaling_speedup(&fitted, shape, t.accelerators)?)))
        .collect::<Result<Vec<_>>>()?;
    if best.2 > MAX_REL_ERR {
        return Err(Error::CalibrationUnreached { best: Box::new(fitted), max_rel_err: best.2 });
    }
    Ok(Calibration { config: fitted, achieved, max_rel_err: best.2 })
}
