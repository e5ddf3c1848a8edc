//! C ABI over calibkit.
//!
//! Losses and curves are opaque handles created by `ck_*_from_*` and
//! released with the matching `ck_*_free`. Every fallible call returns a
//! [`CkStatus`] and writes its result through an out pointer; after a
//! non-OK status, [`ck_last_error_message`] describes the failure on the
//! calling thread. Class indices are 0-based.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::slice;

use calibkit::calibration::{
    delta_binary_closed, delta_binary_numeric, delta_max_global, delta_max_pointwise, generalized_inverse, CalibrationCurve,
    CurveMethod, Inverse,
};
use calibkit::conversion::{convert_mtnc, RiskBoundInput};
use calibkit::losses::{Distribution, LossSpec, PhiKind, Surrogate, Transform};
use calibkit::optimize::OptimizerSettings;
use calibkit::spec_io::loss_from_json;
use calibkit::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CkStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DomainError = 3,
    NotCalibrated = 4,
    Unbounded = 5,
    Io = 6,
    Internal = 7,
}

/// A validated loss specification.
pub struct CkLoss(LossSpec);

/// A calibration curve on an increasing ε grid.
pub struct CkCurve(CalibrationCurve);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> CkStatus {
    set_error(&e.to_string());
    match e {
        Error::Field { .. } => CkStatus::InvalidArgument,
        Error::Domain(_) | Error::Unsupported(_) | Error::Infeasible(_) => CkStatus::DomainError,
        Error::NotCalibrated => CkStatus::NotCalibrated,
        Error::Unbounded(_) => CkStatus::Unbounded,
        Error::Io(_) => CkStatus::Io,
    }
}

/// Runs `f`, mapping errors and panics to a status.
fn guard(f: impl FnOnce() -> Result<(), CkStatus>) -> CkStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CkStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic");
            CkStatus::Internal
        }
    }
}

fn fail(e: Error) -> CkStatus {
    status_of(&e)
}

fn null() -> CkStatus {
    set_error("null pointer argument");
    CkStatus::NullPointer
}

fn invalid(msg: &str) -> CkStatus {
    set_error(msg);
    CkStatus::InvalidArgument
}

unsafe fn c_str<'a>(p: *const c_char) -> Result<&'a str, CkStatus> {
    if p.is_null() {
        return Err(null());
    }
    unsafe { CStr::from_ptr(p) }.to_str().map_err(|_| invalid("string is not UTF-8"))
}

unsafe fn f64s<'a>(p: *const f64, n: usize) -> Result<&'a [f64], CkStatus> {
    if p.is_null() {
        return Err(null());
    }
    Ok(unsafe { slice::from_raw_parts(p, n) })
}

unsafe fn put<T>(out: *mut T, v: T) -> Result<(), CkStatus> {
    if out.is_null() {
        return Err(null());
    }
    unsafe { out.write(v) };
    Ok(())
}

unsafe fn loss_ref<'a>(l: *const CkLoss) -> Result<&'a LossSpec, CkStatus> {
    unsafe { l.as_ref() }.map(|l| &l.0).ok_or_else(null)
}

unsafe fn curve_ref<'a>(c: *const CkCurve) -> Result<&'a CalibrationCurve, CkStatus> {
    unsafe { c.as_ref() }.map(|c| &c.0).ok_or_else(null)
}

unsafe fn transform(kind: *const c_char, tau: f64, a: f64, b: f64) -> Result<Transform, CkStatus> {
    let kind: PhiKind = unsafe { c_str(kind) }?.parse().map_err(fail)?;
    let mut t = Transform::new(kind);
    if !tau.is_nan() {
        t.tau = tau;
    }
    if !a.is_nan() {
        t.a = a;
    }
    if !b.is_nan() {
        t.b = b;
    }
    t.validate().map_err(fail)?;
    Ok(t)
}

unsafe fn put_inverse(inv: Inverse, out_eps: *mut f64, out_beyond: *mut bool) -> Result<(), CkStatus> {
    unsafe {
        put(out_eps, inv.eps)?;
        if !out_beyond.is_null() {
            out_beyond.write(inv.beyond_curve);
        }
    }
    Ok(())
}

/// Message for the last non-OK status on this thread; empty if none. Valid
/// until the next call into this library from the same thread.
#[unsafe(no_mangle)]
pub extern "C" fn ck_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[unsafe(no_mangle)]
pub extern "C" fn ck_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses a flat JSON loss specification into a new handle.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` writable.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ck_loss_from_json(json: *const c_char, out: *mut *mut CkLoss) -> CkStatus {
    guard(|| {
        let text = unsafe { c_str(json) }?;
        let loss = loss_from_json(text).map_err(fail)?;
        unsafe { put(out, Box::into_raw(Box::new(CkLoss(loss)))) }
    })
}

/// # Safety
/// `loss` must come from [`ck_loss_from_json`] and not be freed twice. Null is ignored.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ck_loss_free(loss: *mut CkLoss) {
    if !loss.is_null() {
        drop(unsafe { Box::from_raw(loss) });
    }
}

/// Number of classes of the loss.
///
/// # Safety
/// `loss` must be a live handle and `out` writable.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ck_loss_classes(loss: *const CkLoss, out: *mut usize) -> CkStatus {
    guard(|| unsafe { put(out, loss_ref(loss)?.k()) })
}

/// L(s, y) for scores `s` of length `k`, which must match the loss.
///
/// # Safety
/// `scores` must point to `k` doubles and `out` be writable.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ck_loss_eval(loss: *const CkLoss, scores: *const f64, k: usize, y: usize, out: *mut f64) -> CkStatus {
    guard(|| {
        let l = unsafe { loss_ref(loss) }?;
        let s = unsafe { f64s(scores, k) }?;
        if k != l.k() || y >= k {
            return Err(invalid(&format!("need {} scores and y < {}", l.k(), l.k())));
        }
        l.score_set.check(s).map_err(fail)?;
        unsafe { put(out, l.loss(s, y)) }
    })
}

/// Σ_y p_y L(s, y).
///
/// # Safety
/// `scores` and `p` must point to `k` doubles each and `out` be writable.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ck_pointwise_risk(
    loss: *const CkLoss,
    scores: *const f64,
    p: *const f64,
    k: usize,
    out: *mut f64,
) -> CkStatus {
    guard(|| {
        let l = unsafe { loss_ref(loss) }?;
        let (s, p) = unsafe { (f64s(scores, k)?, f64s(p, k)?) };
        if k != l.k() {
            return Err(invalid(&format!("need {} classes", l.k())));
        }
        l.score_set.check(s).map_err(fail)?;
        Distribution::new(p.to_vec()).map_err(fail)?;
        unsafe { put(out, l.risk(s, p)) }
    })
}

/// Closed-form binary calibration function of a transformation. `tau`, `a`
/// and `b` are the kink location, exponent/slope and offset; NaN keeps the
/// default.
///
/// # Safety
/// `phi_kind` must be a NUL-terminated string and `out` writable.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ck_delta_binary_closed(
    phi_kind: *const c_char,
    tau: f64,
    a: f64,
    b: f64,
    eps: f64,
    out: *mut f64,
) -> CkStatus {
    guard(|| {
        let phi = unsafe { transform(phi_kind, tau, a, b) }?;
        let d = delta_binary_closed(&phi, eps).map_err(fail)?;
        unsafe { put(out, d) }
    })
}

/// Numeric binary calibration function; `out_residual` may be null.
///
/// # Safety
/// As [`ck_delta_binary_closed`]; `out_residual` is writable or null.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ck_delta_binary_numeric(
    phi_kind: *const c_char,
    tau: f64,
    a: f64,
    b: f64,
    eps: f64,
    out: *mut f64,
    out_residual: *mut f64,
) -> CkStatus {
    guard(|| {
        let phi = unsafe { transform(phi_kind, tau, a, b) }?;
        let d = delta_binary_numeric(&phi, eps, &OptimizerSettings::default()).map_err(fail)?;
        unsafe {
            put(out, d.value)?;
            if !out_residual.is_null() {
                out_residual.write(d.residual);
            }
        }
        Ok(())
    })
}

/// δ_max(ε, p) at one distribution `p` of length `k`. +∞ when no class is
/// ε-suboptimal at `p`.
///
/// # Safety
/// `p` must point to `k` doubles and `out` be writable.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ck_delta_max_pointwise(
    loss: *const CkLoss,
    eps: f64,
    p: *const f64,
    k: usize,
    out: *mut f64,
) -> CkStatus {
    guard(|| {
        let l = unsafe { loss_ref(loss) }?;
        let p = unsafe { f64s(p, k) }?;
        if k != l.k() {
            return Err(invalid(&format!("need {} classes", l.k())));
        }
        let d = Distribution::new(p.to_vec()).map_err(fail)?;
        let r = delta_max_pointwise(l, eps, &d, &OptimizerSettings::default()).map_err(fail)?;
        unsafe { put(out, r.value) }
    })
}

/// δ_max(ε) over a simplex grid of the given resolution (K ≤ 4).
///
/// # Safety
/// `loss` must be a live handle and `out` writable.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ck_delta_max_global(loss: *const CkLoss, eps: f64, resolution: usize, out: *mut f64) -> CkStatus {
    guard(|| {
        let l = unsafe { loss_ref(loss) }?;
        let r = delta_max_global(l, eps, resolution, &OptimizerSettings::default()).map_err(fail)?;
        unsafe { put(out, r.value) }
    })
}

/// Reads a curve CSV with at least `eps` and `delta` columns.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ck_curve_from_csv(path: *const c_char, out: *mut *mut CkCurve) -> CkStatus {
    guard(|| {
        let path = unsafe { c_str(path) }?;
        let c = CalibrationCurve::load_csv(CurveMethod::NumericBinary, Path::new(path)).map_err(fail)?;
        unsafe { put(out, Box::into_raw(Box::new(CkCurve(c)))) }
    })
}

/// Builds a curve from `n` (ε, δ) pairs with increasing ε.
///
/// # Safety
/// `eps` and `delta` must point to `n` doubles each and `out` be writable.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ck_curve_from_points(eps: *const f64, delta: *const f64, n: usize, out: *mut *mut CkCurve) -> CkStatus {
    guard(|| {
        let (e, d) = unsafe { (f64s(eps, n)?, f64s(delta, n)?) };
        let pairs: Vec<(f64, f64)> = e.iter().copied().zip(d.iter().copied()).collect();
        let c = CalibrationCurve::from_pairs(CurveMethod::NumericBinary, &pairs).map_err(fail)?;
        unsafe { put(out, Box::into_raw(Box::new(CkCurve(c)))) }
    })
}

/// # Safety
/// `curve` must come from a `ck_curve_from_*` call and not be freed twice. Null is ignored.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ck_curve_free(curve: *mut CkCurve) {
    if !curve.is_null() {
        drop(unsafe { Box::from_raw(curve) });
    }
}

/// inf{ε : δ(ε) ≥ x}. `out_beyond` (may be null) is set when no grid point
/// reaches x; `out_eps` is then the largest grid ε.
///
/// # Safety
/// `curve` must be a live handle; `out_eps` writable; `out_beyond` writable or null.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ck_generalized_inverse(curve: *const CkCurve, x: f64, out_eps: *mut f64, out_beyond: *mut bool) -> CkStatus {
    guard(|| {
        let c = unsafe { curve_ref(curve) }?;
        let inv = generalized_inverse(c, x).map_err(fail)?;
        unsafe { put_inverse(inv, out_eps, out_beyond) }
    })
}

/// 0-1 excess bound under a noise condition with constants `c` and `alpha`.
///
/// # Safety
/// As [`ck_generalized_inverse`].
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ck_convert_mtnc(
    curve: *const CkCurve,
    surrogate_excess: f64,
    c: f64,
    alpha: f64,
    out_eps: *mut f64,
    out_beyond: *mut bool,
) -> CkStatus {
    guard(|| {
        let cv = unsafe { curve_ref(curve) }?;
        let input = RiskBoundInput { c: Some(c), alpha: Some(alpha), ..RiskBoundInput::excess(surrogate_excess) };
        let inv = convert_mtnc(cv, &input).map_err(fail)?;
        unsafe { put_inverse(inv, out_eps, out_beyond) }
    })
}
