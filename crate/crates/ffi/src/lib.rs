//! C ABI over `pconvex`.
//!
//! Every function returns a [`PcxStatus`]; results go through out-pointers.
//! On failure `pcx_last_error()` returns a message for the calling thread.
//! Bodies are opaque and must be released with `pcx_body_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use pconvex::cli::{self, RunError, RunOptions};
use pconvex::gauge::{self, PBody};
use pconvex::pcore::{self, PExponent};
use pconvex::{retract, Error};

/// Result codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PcxStatus {
    Ok = 0,
    NullPointer = 1,
    /// `p` outside (0,1] or another rejected parameter.
    InvalidArgument = 2,
    DimensionMismatch = 3,
    /// Numerical failure, e.g. an unbounded body.
    Numerical = 4,
    Precondition = 5,
    /// Scenario file could not be read.
    Io = 6,
    /// Scenario file is malformed.
    InvalidConfig = 7,
    Panic = 8,
}

/// Opaque body handle.
pub struct PcxBody {
    inner: PBody,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &Error) -> PcxStatus {
    match e {
        Error::InvalidExponent(_) | Error::Domain(_) | Error::Parameter(_) | Error::InvalidBody(_) | Error::InvalidSchedule(_) | Error::WeightValidation { .. } => {
            PcxStatus::InvalidArgument
        }
        Error::LengthMismatch { .. } | Error::DimensionMismatch { .. } => PcxStatus::DimensionMismatch,
        Error::Precondition { .. } | Error::UnsupportedRegime(_) => PcxStatus::Precondition,
        _ => PcxStatus::Numerical,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (PcxStatus, String)>) -> PcxStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PcxStatus::Ok,
        Ok(Err((s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("internal panic");
            PcxStatus::Panic
        }
    }
}

fn lift<T>(r: pconvex::Result<T>) -> Result<T, (PcxStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (PcxStatus, String) {
    (PcxStatus::NullPointer, format!("{what} is null"))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], (PcxStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn body_ref<'a>(b: *const PcxBody) -> Result<&'a PBody, (PcxStatus, String)> {
    b.as_ref().map(|b| &b.inner).ok_or_else(|| null("body"))
}

unsafe fn emit_body(out: *mut *mut PcxBody, body: pconvex::Result<PBody>) -> Result<(), (PcxStatus, String)> {
    if out.is_null() {
        return Err(null("out"));
    }
    let inner = lift(body)?;
    *out = Box::into_raw(Box::new(PcxBody { inner }));
    Ok(())
}

fn exponent(p: f64) -> Result<PExponent, (PcxStatus, String)> {
    lift(PExponent::new(p))
}

/// Message for the last failed call on this thread, or NULL. Valid until the
/// next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn pcx_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pcx_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Weighted p-ball `{x : Σ w_i |x_i|^p ≤ 1}`.
///
/// # Safety
/// `weights` must point to `dim` doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pcx_body_pball(weights: *const f64, dim: usize, p: f64, out: *mut *mut PcxBody) -> PcxStatus {
    guard(|| {
        let w = slice(weights, dim, "weights")?.to_vec();
        emit_body(out, PBody::pball(w, exponent(p)?))
    })
}

/// Euclidean disk of `radius` centered at 0.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pcx_body_euclidean_disk(dim: usize, radius: f64, p: f64, out: *mut *mut PcxBody) -> PcxStatus {
    guard(|| emit_body(out, PBody::euclidean_disk(dim, radius, exponent(p)?)))
}

/// Axis-aligned box `{x : |x_i| ≤ h_i}`.
///
/// # Safety
/// `half_widths` must point to `dim` doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pcx_body_box(half_widths: *const f64, dim: usize, p: f64, out: *mut *mut PcxBody) -> PcxStatus {
    guard(|| {
        let h = slice(half_widths, dim, "half_widths")?.to_vec();
        emit_body(out, PBody::box_body(h, exponent(p)?))
    })
}

/// Releases a body. NULL is ignored.
///
/// # Safety
/// `body` must come from a `pcx_body_*` constructor and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn pcx_body_free(body: *mut PcxBody) {
    if !body.is_null() {
        drop(Box::from_raw(body));
    }
}

/// Dimension of `body`, or 0 for NULL.
///
/// # Safety
/// `body` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pcx_body_dim(body: *const PcxBody) -> usize {
    body.as_ref().map_or(0, |b| b.inner.dim())
}

/// Gauge of `x`, accurate to `tol`.
///
/// # Safety
/// `x` must point to `dim` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pcx_gauge(body: *const PcxBody, x: *const f64, dim: usize, tol: f64, out: *mut f64) -> PcxStatus {
    guard(|| {
        let b = body_ref(body)?;
        let x = slice(x, dim, "x")?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = lift(gauge::gauge(b, x, tol))?;
        Ok(())
    })
}

/// Membership test; writes 1 or 0.
///
/// # Safety
/// `x` must point to `dim` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pcx_contains(body: *const PcxBody, x: *const f64, dim: usize, out: *mut i32) -> PcxStatus {
    guard(|| {
        let b = body_ref(body)?;
        let x = slice(x, dim, "x")?;
        if dim != b.dim() {
            return lift(Err(Error::DimensionMismatch { expected: b.dim(), got: dim }));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        *out = i32::from(b.contains(x));
        Ok(())
    })
}

/// Radial retraction of `x` onto `body`, written to `out[0..dim]`.
///
/// # Safety
/// `x` and `out` must each point to `dim` doubles. They may alias.
#[no_mangle]
pub unsafe extern "C" fn pcx_retract(body: *const PcxBody, x: *const f64, dim: usize, tol: f64, out: *mut f64) -> PcxStatus {
    guard(|| {
        let b = body_ref(body)?;
        let r = lift(retract::retract_point(b, slice(x, dim, "x")?, tol))?;
        if out.is_null() {
            return Err(null("out"));
        }
        std::slice::from_raw_parts_mut(out, dim).copy_from_slice(&r);
        Ok(())
    })
}

/// Splits `u ∈ [0,1]` into `(u^(1/p), (1-u)^(1/p))`.
///
/// # Safety
/// `s` and `t` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pcx_admissible_pair(p: f64, u: f64, s: *mut f64, t: *mut f64) -> PcxStatus {
    guard(|| {
        if s.is_null() || t.is_null() {
            return Err(null("output"));
        }
        let (a, b) = lift(pcore::admissible_pair(exponent(p)?, u))?;
        *s = a;
        *t = b;
        Ok(())
    })
}

/// Runs the scenario at `config_path` and writes its report to `out_dir`.
/// `seed` overrides the config seed when `use_seed` is non-zero. Failed
/// tasks are recorded in the report and do not change the status.
///
/// # Safety
/// Both paths must be NUL-terminated UTF-8 strings.
#[no_mangle]
pub unsafe extern "C" fn pcx_run_scenario(config_path: *const c_char, out_dir: *const c_char, seed: u64, use_seed: i32, parallel: i32) -> PcxStatus {
    guard(|| {
        let path = cstr(config_path, "config_path")?;
        let out = cstr(out_dir, "out_dir")?;
        let opts = RunOptions { seed: (use_seed != 0).then_some(seed), out_dir: Some(PathBuf::from(out)), parallel: parallel != 0 };
        cli::run_scenario(path.as_ref(), &opts).map(|_| ()).map_err(|e| {
            let status = match &e {
                RunError::Config(c) if c.exit_code() == 2 => PcxStatus::Io,
                RunError::Config(_) => PcxStatus::InvalidConfig,
                RunError::Output(_) => PcxStatus::Io,
            };
            (status, e.to_string())
        })
    })
}

unsafe fn cstr<'a>(p: *const c_char, what: &str) -> Result<&'a str, (PcxStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| (PcxStatus::InvalidArgument, format!("{what} is not UTF-8")))
}
