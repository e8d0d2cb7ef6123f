//! C interface to `partprune`.
//!
//! Objects cross the boundary as opaque handles owned by the caller and
//! released with the matching `*_free` function. Every fallible call returns
//! a [`PpStatus`]; on failure [`pp_last_error_message`] describes the error
//! for the calling thread. Panics are caught and reported as
//! `PP_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use partprune::cli::{simulate_layer, verify, Mode};
use partprune::io::{read_matrix, ResultFile};
use partprune::partitioner::{brute_force_partition, multi_restart, refine_swaps};
use partprune::perfmodel::SimConfig;
use partprune::{Error, PruneResult, WeightMatrix};

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Infeasible = 3,
    BudgetExceeded = 4,
    Io = 5,
    Format = 6,
    VerificationFailed = 7,
    Panic = 99,
}

/// A weight matrix.
pub struct PpWeights(WeightMatrix);

/// A pruning result.
pub struct PpResult {
    result: PruneResult,
    refined: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: String) {
    let message = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = message);
}

fn status_of(err: &Error) -> PpStatus {
    match err {
        Error::Infeasible(_) => PpStatus::Infeasible,
        Error::BudgetExceeded { .. } => PpStatus::BudgetExceeded,
        Error::Io(_) => PpStatus::Io,
        Error::Format(_) | Error::Json(_) => PpStatus::Format,
        Error::VerificationFailed(_) => PpStatus::VerificationFailed,
        _ => PpStatus::InvalidArgument,
    }
}

enum Failure {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> PpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PpStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            PpStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            PpStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(what))
}

unsafe fn c_str<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::Lib(Error::Format(format!("{what} is not UTF-8"))))
}

/// Message for the last failed call on this thread; empty if none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn pp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Copies `rows * cols` row-major values into a new matrix.
///
/// # Safety
/// `values` must point to `rows * cols` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pp_weights_new(
    rows: usize,
    cols: usize,
    values: *const f64,
    out_weights: *mut *mut PpWeights,
) -> PpStatus {
    guard(|| {
        let slot = out(out_weights, "out_weights")?;
        if values.is_null() {
            return Err(Failure::Null("values"));
        }
        let n = rows.checked_mul(cols).ok_or(Error::DegenerateLayer { rows, cols })?;
        let data = std::slice::from_raw_parts(values, n).to_vec();
        *slot = Box::into_raw(Box::new(PpWeights(WeightMatrix::new(rows, cols, data)?)));
        Ok(())
    })
}

/// Reads a CSV or BPWM matrix file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out_weights` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pp_weights_load(path: *const c_char, out_weights: *mut *mut PpWeights) -> PpStatus {
    guard(|| {
        let slot = out(out_weights, "out_weights")?;
        let path = c_str(path, "path")?;
        *slot = Box::into_raw(Box::new(PpWeights(read_matrix(Path::new(path))?)));
        Ok(())
    })
}

/// # Safety
/// `weights` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pp_weights_rows(weights: *const PpWeights) -> usize {
    weights.as_ref().map_or(0, |w| w.0.rows())
}

/// # Safety
/// `weights` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pp_weights_cols(weights: *const PpWeights) -> usize {
    weights.as_ref().map_or(0, |w| w.0.cols())
}

/// # Safety
/// `weights` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pp_weights_free(weights: *mut PpWeights) {
    if !weights.is_null() {
        drop(Box::from_raw(weights));
    }
}

/// Best of `restarts` greedy runs, optionally refined by swaps.
///
/// # Safety
/// `weights` must be a live handle; `out_result` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pp_prune(
    weights: *const PpWeights,
    p: usize,
    restarts: usize,
    seed: u64,
    refine: bool,
    out_result: *mut *mut PpResult,
) -> PpStatus {
    guard(|| {
        let w = &deref(weights, "weights")?.0;
        let slot = out(out_result, "out_result")?;
        let mut result = multi_restart(w, p, restarts, seed)?;
        if refine {
            result = refine_swaps(w, &result, usize::MAX)?;
        }
        *slot = Box::into_raw(Box::new(PpResult { result, refined: refine }));
        Ok(())
    })
}

/// # Safety
/// `result` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pp_result_free(result: *mut PpResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Sum of absolute pruned weights; NaN for a null handle.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pp_result_weight_loss(result: *const PpResult) -> f64 {
    result.as_ref().map_or(f64::NAN, |r| r.result.weight_loss)
}

/// Surviving links over all links; NaN for a null handle.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pp_result_ratio(result: *const PpResult) -> f64 {
    result.as_ref().map_or(f64::NAN, |r| r.result.ratio)
}

/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pp_result_connectedness(result: *const PpResult) -> usize {
    result.as_ref().map_or(0, |r| r.result.connectedness)
}

/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pp_result_partitions(result: *const PpResult) -> usize {
    result.as_ref().map_or(0, |r| r.result.assignment.p)
}

unsafe fn copy_labels(labels: &[usize], buf: *mut usize, len: usize) -> Result<(), Failure> {
    if buf.is_null() {
        return Err(Failure::Null("buf"));
    }
    if len != labels.len() {
        return Err(Error::DimensionMismatch(format!("buffer holds {len}, need {}", labels.len())).into());
    }
    ptr::copy_nonoverlapping(labels.as_ptr(), buf, len);
    Ok(())
}

/// Copies the 0-based partition label of every row into `buf`, which must
/// hold exactly the number of rows.
///
/// # Safety
/// `buf` must point to `len` writable `size_t`s.
#[no_mangle]
pub unsafe extern "C" fn pp_result_row_partition(result: *const PpResult, buf: *mut usize, len: usize) -> PpStatus {
    guard(|| copy_labels(&deref(result, "result")?.result.assignment.row_of, buf, len))
}

/// Column counterpart of [`pp_result_row_partition`].
///
/// # Safety
/// `buf` must point to `len` writable `size_t`s.
#[no_mangle]
pub unsafe extern "C" fn pp_result_col_partition(result: *const PpResult, buf: *mut usize, len: usize) -> PpStatus {
    guard(|| copy_labels(&deref(result, "result")?.result.assignment.col_of, buf, len))
}

/// The result in the JSON result-file format. Free with [`pp_string_free`].
///
/// # Safety
/// `result` must be a live handle; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pp_result_to_json(result: *const PpResult, out_json: *mut *mut c_char) -> PpStatus {
    guard(|| {
        let r = deref(result, "result")?;
        let slot = out(out_json, "out_json")?;
        let text = serde_json::to_string_pretty(&ResultFile::from_result(&r.result, r.refined)).map_err(Error::from)?;
        *slot = CString::new(text).expect("JSON has no NUL").into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Exhaustive minimum weight loss; fails with `PP_STATUS_BUDGET_EXCEEDED`
/// when more than `budget` candidates would be enumerated.
///
/// # Safety
/// `weights` must be a live handle; `out_loss` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pp_oracle(weights: *const PpWeights, p: usize, budget: u64, out_loss: *mut f64) -> PpStatus {
    guard(|| {
        let w = &deref(weights, "weights")?.0;
        let slot = out(out_loss, "out_loss")?;
        *slot = brute_force_partition(w, p, budget as u128)?.optimum_loss;
        Ok(())
    })
}

/// Checks `result` against `weights`: balance rules, then `trials`
/// partitioned-versus-masked products. A broken rule or a mismatch returns
/// `PP_STATUS_VERIFICATION_FAILED`; `out_max_rel_err` is written when
/// non-null.
///
/// # Safety
/// Handles must be live; `out_max_rel_err` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn pp_verify(
    weights: *const PpWeights,
    result: *const PpResult,
    trials: usize,
    tolerance: f64,
    seed: u64,
    out_max_rel_err: *mut f64,
) -> PpStatus {
    guard(|| {
        let w = &deref(weights, "weights")?.0;
        let r = deref(result, "result")?;
        let report = verify(w, &ResultFile::from_result(&r.result, r.refined), trials, tolerance, seed)?;
        if let Some(slot) = out_max_rel_err.as_mut() {
            *slot = report.max_rel_err;
        }
        match (report.passed, report.violation) {
            (true, _) => Ok(()),
            (false, Some(v)) => Err(Error::VerificationFailed(v).into()),
            (false, None) => {
                Err(Error::VerificationFailed(format!("max relative error {:e}", report.max_rel_err)).into())
            }
        }
    })
}

/// Speedup and energy ratio of a `rows x cols` layer split into `p` blocks
/// on `p` accelerators, against the dense layer on one. `config_json` is a
/// simulator config document, or null for defaults.
///
/// # Safety
/// `config_json` must be null or NUL-terminated; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn pp_simulate_speedup(
    config_json: *const c_char,
    rows: usize,
    cols: usize,
    batch: usize,
    p: usize,
    out_speedup: *mut f64,
    out_energy_ratio: *mut f64,
) -> PpStatus {
    guard(|| {
        let speedup = out(out_speedup, "out_speedup")?;
        let energy = out(out_energy_ratio, "out_energy_ratio")?;
        let config: SimConfig = if config_json.is_null() {
            SimConfig::default()
        } else {
            serde_json::from_str(c_str(config_json, "config_json")?).map_err(Error::from)?
        };
        config.validate()?;
        let report = simulate_layer(&config, rows, cols, batch, p, Mode::Partitioned, false)?;
        *speedup = report.speedup;
        *energy = report.energy_ratio;
        Ok(())
    })
}
