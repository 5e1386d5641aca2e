//! C interface: opaque instance handles, status codes and a thread-local
//! message for the most recent failure.
//!
//! Every function returns [`RrStatus`]; outputs are written through pointers
//! only on success. Panics are caught at the boundary and reported as
//! `RR_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use nalgebra::{DMatrix, DVector};
use robust_regress::estimate::{fit, EstimatorKind};
use robust_regress::harness::{parse_noise_pattern, trial_instance, ExperimentConfig};
use robust_regress::median::select_median;
use robust_regress::model::error_metrics;
use robust_regress::{Error, HuberParams, NoiseSpec, RandomSource, RegressionInstance};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RrStatus {
    Ok = 0,
    InvalidArgument = 1,
    ShapeMismatch = 2,
    MissingTruth = 3,
    EstimationFailure = 4,
    SingularMatrix = 5,
    NotPositiveDefinite = 6,
    Precondition = 7,
    Parse = 8,
    Io = 9,
    NullPointer = 10,
    Panic = 11,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RrMedianKind {
    Iteration = 0,
    Bootstrap = 1,
    SparseBootstrap = 2,
    Nonspherical = 3,
}

/// Opaque regression instance owned by the caller until [`rr_instance_free`].
pub struct RrInstance {
    inner: RegressionInstance,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> RrStatus {
    match e {
        Error::InvalidArgument(_) => RrStatus::InvalidArgument,
        Error::ShapeMismatch(_) => RrStatus::ShapeMismatch,
        Error::MissingTruth => RrStatus::MissingTruth,
        Error::EstimationFailure(_) => RrStatus::EstimationFailure,
        Error::SingularMatrix(_) => RrStatus::SingularMatrix,
        Error::NotPositiveDefinite(_) => RrStatus::NotPositiveDefinite,
        Error::Precondition(_) => RrStatus::Precondition,
        Error::Parse(_) | Error::Json(_) => RrStatus::Parse,
        Error::Io(_) => RrStatus::Io,
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

fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> RrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            RrStatus::Ok
        }
        Ok(Err(Failure::Null(what))) => {
            set_last_error(&format!("null pointer: {what}"));
            RrStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            set_last_error(&format!("{}: {e}", e.code()));
            status_of(&e)
        }
        Err(_) => {
            set_last_error("panic inside robust-regress");
            RrStatus::Panic
        }
    }
}

fn nonnull<T>(p: *const T, what: &'static str) -> Result<*const T, Failure> {
    if p.is_null() {
        Err(Failure::Null(what))
    } else {
        Ok(p)
    }
}

fn nonnull_mut<T>(p: *mut T, what: &'static str) -> Result<*mut T, Failure> {
    if p.is_null() {
        Err(Failure::Null(what))
    } else {
        Ok(p)
    }
}

unsafe fn instance<'a>(h: *const RrInstance) -> Result<&'a RegressionInstance, Failure> {
    Ok(&(*nonnull(h, "instance")?).inner)
}

unsafe fn write_beta(beta: &DVector<f64>, out: *mut f64, len: usize) -> Result<(), Failure> {
    let out = nonnull_mut(out, "beta_out")?;
    if len != beta.len() {
        return Err(Error::ShapeMismatch(format!("beta_out has length {len}, estimate has {}", beta.len())).into());
    }
    ptr::copy_nonoverlapping(beta.as_ptr(), out, len);
    Ok(())
}

/// Copies a row-major `n x d` design and `n` responses into a new instance.
///
/// # Safety
/// `x` must point to `n * d` doubles, `y` to `n` doubles and `out` to writable storage.
#[no_mangle]
pub unsafe extern "C" fn rr_instance_new(
    x: *const f64,
    y: *const f64,
    n: usize,
    d: usize,
    out: *mut *mut RrInstance,
) -> RrStatus {
    guard(|| {
        let out = nonnull_mut(out, "out")?;
        let x = nonnull(x, "x")?;
        let y = nonnull(y, "y")?;
        let len = n
            .checked_mul(d)
            .ok_or_else(|| Error::InvalidArgument(format!("{n} x {d} overflows")))?;
        let xs = std::slice::from_raw_parts(x, len);
        let ys = std::slice::from_raw_parts(y, n);
        let inner = RegressionInstance::new(DMatrix::from_row_slice(n, d, xs), DVector::from_column_slice(ys))?;
        *out = Box::into_raw(Box::new(RrInstance { inner }));
        Ok(())
    })
}

/// Gaussian design with oblivious noise and a planted `beta_star` of norm `beta_norm`.
///
/// `noise` is a NUL-terminated `spike:MAG`, `gauss:SIGMA` or `pareto:SHAPE`.
///
/// # Safety
/// `noise` must be a valid C string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rr_instance_generate(
    n: usize,
    d: usize,
    alpha: f64,
    noise: *const c_char,
    beta_norm: f64,
    seed: u64,
    out: *mut *mut RrInstance,
) -> RrStatus {
    guard(|| {
        let out = nonnull_mut(out, "out")?;
        let noise = CStr::from_ptr(nonnull(noise, "noise")?);
        let noise = noise.to_str().map_err(|_| Error::Parse("noise is not UTF-8".into()))?;
        let spec = NoiseSpec::new(alpha, parse_noise_pattern(noise)?);
        let mut cfg = ExperimentConfig::new(vec![n], d, spec, vec![EstimatorKind::Huber]);
        cfg.beta.norm = beta_norm;
        cfg.validate()?;
        let inner = trial_instance(&cfg, n, seed)?;
        *out = Box::into_raw(Box::new(RrInstance { inner }));
        Ok(())
    })
}

/// Releases an instance; null is ignored.
///
/// # Safety
/// `inst` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn rr_instance_free(inst: *mut RrInstance) {
    if !inst.is_null() {
        let _ = catch_unwind(AssertUnwindSafe(|| drop(Box::from_raw(inst))));
    }
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn rr_instance_dims(inst: *const RrInstance, n: *mut usize, d: *mut usize) -> RrStatus {
    guard(|| {
        let i = instance(inst)?;
        *nonnull_mut(n, "n")? = i.n();
        *nonnull_mut(d, "d")? = i.d();
        Ok(())
    })
}

/// Copies the planted `beta_star` (generated instances only).
///
/// # Safety
/// `beta_out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn rr_instance_beta_star(inst: *const RrInstance, beta_out: *mut f64, len: usize) -> RrStatus {
    guard(|| {
        let truth = instance(inst)?.require_truth()?;
        write_beta(&truth.beta_star, beta_out, len)
    })
}

/// Huber fit with transition `h` (scale 2). `iterations` and `converged` may be null.
///
/// # Safety
/// `beta_out` must hold `len == d` doubles.
#[no_mangle]
pub unsafe extern "C" fn rr_fit_huber(
    inst: *const RrInstance,
    h: f64,
    beta_out: *mut f64,
    len: usize,
    iterations: *mut usize,
    converged: *mut bool,
) -> RrStatus {
    guard(|| {
        let i = instance(inst)?;
        let p = HuberParams {
            h,
            ..HuberParams::default()
        };
        let out = fit(i, EstimatorKind::Huber, &p, None, &RandomSource::new(0, 0))?;
        write_beta(&out.beta_hat, beta_out, len)?;
        if !iterations.is_null() {
            *iterations = out.iterations;
        }
        if !converged.is_null() {
            *converged = out.converged;
        }
        Ok(())
    })
}

/// Median estimators selected by an [`RrMedianKind`] value. `k` is used by the sparse
/// variant, `delta` by the bootstrapped ones.
///
/// # Safety
/// `beta_out` must hold `len == d` doubles.
#[no_mangle]
pub unsafe extern "C" fn rr_fit_median(
    inst: *const RrInstance,
    kind: u32,
    k: usize,
    delta: f64,
    seed: u64,
    beta_out: *mut f64,
    len: usize,
) -> RrStatus {
    guard(|| {
        let i = instance(inst)?;
        let est = match kind {
            k_ if k_ == RrMedianKind::Iteration as u32 => EstimatorKind::MedianIter,
            k_ if k_ == RrMedianKind::Bootstrap as u32 => EstimatorKind::MedianBootstrap,
            k_ if k_ == RrMedianKind::SparseBootstrap as u32 => EstimatorKind::SparseBootstrap(k),
            k_ if k_ == RrMedianKind::Nonspherical as u32 => EstimatorKind::NonsphericalBootstrap,
            other => return Err(Error::InvalidArgument(format!("unknown median kind {other}")).into()),
        };
        let out = fit(
            i,
            est,
            &HuberParams::default(),
            Some(delta),
            &RandomSource::new(seed, 0),
        )?;
        write_beta(&out.beta_hat, beta_out, len)
    })
}

/// `||beta - beta_star||^2` and `(1/n) ||X (beta - beta_star)||^2`.
///
/// # Safety
/// `beta` must hold `len` doubles; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn rr_error_metrics(
    inst: *const RrInstance,
    beta: *const f64,
    len: usize,
    err_param: *mut f64,
    err_pred: *mut f64,
) -> RrStatus {
    guard(|| {
        let i = instance(inst)?;
        let b = DVector::from_column_slice(std::slice::from_raw_parts(nonnull(beta, "beta")?, len));
        let m = error_metrics(&b, i)?;
        *nonnull_mut(err_param, "err_param")? = m.err_param;
        *nonnull_mut(err_pred, "err_pred")? = m.err_pred;
        Ok(())
    })
}

/// Lower median of `values`, which are reordered in place.
///
/// # Safety
/// `values` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn rr_select_median(values: *mut f64, len: usize, out: *mut f64) -> RrStatus {
    guard(|| {
        let v = std::slice::from_raw_parts_mut(nonnull_mut(values, "values")?, len);
        *nonnull_mut(out, "out")? = select_median(v)?;
        Ok(())
    })
}

/// Message for the last failing call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn rr_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}
