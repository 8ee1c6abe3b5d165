//! C ABI over `picard-core`.
//!
//! Every entry point returns a [`PicardStatus`] and writes results through
//! out-pointers. On failure the message is kept per thread and can be read
//! with [`picard_last_error`]. Panics are caught at the boundary.
//!
//! Eigenvalue tables are passed as opaque `PicardTable` handles owned by the
//! caller and released with [`picard_table_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use num_complex::Complex64;
use picard::count::{count_exact, main_term};
use picard::planner::{remainder_exponent, HypothesisParams, Q};
use picard::selberg::{h_ball, h_pm_real};
use picard::smoothed::{count_smoothed, Sign, SmoothedKernelSpec};
use picard::spectral::EigenvalueTable;
use picard::{Error, PointH3};

/// Result codes shared by every function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PicardStatus {
    Ok = 0,
    NullPointer = -1,
    Domain = -2,
    Parse = -3,
    Io = -4,
    Quadrature = -5,
    Budget = -6,
    Panic = -255,
}

/// Sign of the smoothed kernel: `+1` majorant, `-1` minorant.
pub const PICARD_SIGN_PLUS: i32 = 1;
pub const PICARD_SIGN_MINUS: i32 = -1;

/// Opaque eigenvalue table.
pub struct PicardTable {
    inner: EigenvalueTable,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> PicardStatus {
    match err {
        Error::Domain(_) | Error::OracleCap { .. } | Error::Config(_) => PicardStatus::Domain,
        Error::Parse { .. } => PicardStatus::Parse,
        Error::Io(_) => PicardStatus::Io,
        Error::Quadrature { .. } | Error::NonTermination(_) => PicardStatus::Quadrature,
        Error::Overflow(_) | Error::Budget(_) => PicardStatus::Budget,
    }
}

/// Runs `f`, mapping errors and panics to status codes.
fn guard(f: impl FnOnce() -> Result<(), (PicardStatus, String)>) -> PicardStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            PicardStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {msg}"));
            PicardStatus::Panic
        }
    }
}

fn core<T>(r: picard::Result<T>) -> Result<T, (PicardStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn domain(msg: &str) -> (PicardStatus, String) {
    (PicardStatus::Domain, msg.to_string())
}

fn null(name: &str) -> (PicardStatus, String) {
    (PicardStatus::NullPointer, format!("{name} is null"))
}

unsafe fn write<T>(out: *mut T, v: T, name: &str) -> Result<(), (PicardStatus, String)> {
    if out.is_null() {
        return Err(null(name));
    }
    out.write(v);
    Ok(())
}

fn sign(s: i32) -> Result<Sign, (PicardStatus, String)> {
    match s {
        PICARD_SIGN_PLUS => Ok(Sign::Plus),
        PICARD_SIGN_MINUS => Ok(Sign::Minus),
        _ => Err(domain("sign must be +1 or -1")),
    }
}

fn spec(radius: f64, eta: f64, s: i32) -> Result<SmoothedKernelSpec, (PicardStatus, String)> {
    core(SmoothedKernelSpec::new(radius, eta, sign(s)?))
}

/// Message of the last failed call on this thread, or null after a success.
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn picard_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Number of orbit points `gz` with `cosh d(z, gz) <= x`, `z = (x1, x2, y)`.
///
/// # Safety
/// `out_count` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn picard_count(x: f64, x1: f64, x2: f64, y: f64, out_count: *mut u64) -> PicardStatus {
    guard(|| {
        let z = core(PointH3::new(x1, x2, y))?;
        let n = core(count_exact(x, &z))?.count;
        write(out_count, n, "out_count")
    })
}

/// Leading term of the orbit count at cutoff `x`.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn picard_main_term(x: f64, out: *mut f64) -> PicardStatus {
    guard(|| {
        if !(x.is_finite() && x >= 1.0) {
            return Err(domain("cutoff must be finite and >= 1"));
        }
        write(out, main_term(x), "out")
    })
}

/// Selberg transform of the ball indicator of radius `radius` at `r = re + i im`.
///
/// # Safety
/// `out_re` and `out_im` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn picard_h_ball(
    radius: f64,
    re: f64,
    im: f64,
    out_re: *mut f64,
    out_im: *mut f64,
) -> PicardStatus {
    guard(|| {
        if out_re.is_null() || out_im.is_null() {
            return Err(null("output"));
        }
        let v = core(h_ball(radius, Complex64::new(re, im)))?;
        out_re.write(v.re);
        out_im.write(v.im);
        Ok(())
    })
}

/// Selberg transform of the smoothed kernel at real `r`.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn picard_h_pm(radius: f64, eta: f64, sign: i32, r: f64, out: *mut f64) -> PicardStatus {
    guard(|| {
        let s = spec(radius, eta, sign)?;
        write(out, core(h_pm_real(&s, r))?, "out")
    })
}

/// Smoothed orbit count at `z = (x1, x2, y)`.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn picard_count_smoothed(
    radius: f64,
    eta: f64,
    sign: i32,
    x1: f64,
    x2: f64,
    y: f64,
    out: *mut f64,
) -> PicardStatus {
    guard(|| {
        let s = spec(radius, eta, sign)?;
        let z = core(PointH3::new(x1, x2, y))?;
        write(out, core(count_smoothed(&s, &z))?, "out")
    })
}

/// Remainder exponent for `theta = theta_num/theta_den`, `q = q_num/q_den`,
/// returned in lowest terms.
///
/// # Safety
/// `out_num` and `out_den` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn picard_remainder_exponent(
    theta_num: i64,
    theta_den: i64,
    q_num: i64,
    q_den: i64,
    out_num: *mut i64,
    out_den: *mut i64,
) -> PicardStatus {
    guard(|| {
        if out_num.is_null() || out_den.is_null() {
            return Err(null("output"));
        }
        if theta_den == 0 || q_den == 0 {
            return Err(domain("zero denominator"));
        }
        let p = core(HypothesisParams::new(
            Q::new(theta_num, theta_den),
            Q::new(q_num, q_den),
        ))?;
        let e = remainder_exponent(&p);
        out_num.write(*e.numer());
        out_den.write(*e.denom());
        Ok(())
    })
}

fn boxed(table: EigenvalueTable, out: *mut *mut PicardTable) -> Result<(), (PicardStatus, String)> {
    if out.is_null() {
        return Err(null("out_table"));
    }
    let handle = Box::into_raw(Box::new(PicardTable { inner: table }));
    // SAFETY: checked non-null above; caller guarantees validity.
    unsafe { out.write(handle) };
    Ok(())
}

fn table<'a>(t: *const PicardTable) -> Result<&'a EigenvalueTable, (PicardStatus, String)> {
    // SAFETY: caller passes null or a live handle from this library.
    unsafe { t.as_ref() }.map(|t| &t.inner).ok_or_else(|| null("table"))
}

/// Synthetic table of `n` entries following the Weyl law.
///
/// # Safety
/// `out_table` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn picard_table_synthetic(n: usize, out_table: *mut *mut PicardTable) -> PicardStatus {
    guard(|| boxed(EigenvalueTable::synthetic_weyl(n), out_table))
}

/// Table copied from `len` spectral parameters, nondecreasing.
///
/// # Safety
/// `values` must point to `len` readable doubles (or be null when `len` is 0);
/// `out_table` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn picard_table_from_values(
    values: *const f64,
    len: usize,
    out_table: *mut *mut PicardTable,
) -> PicardStatus {
    guard(|| {
        let entries = if len == 0 {
            Vec::new()
        } else if values.is_null() {
            return Err(null("values"));
        } else {
            std::slice::from_raw_parts(values, len).to_vec()
        };
        boxed(core(EigenvalueTable::new(entries, "ffi"))?, out_table)
    })
}

/// Table read from a CSV file with header `r`.
///
/// # Safety
/// `path` must be null or a NUL-terminated string; `out_table` must be null
/// or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn picard_table_ingest(path: *const c_char, out_table: *mut *mut PicardTable) -> PicardStatus {
    guard(|| {
        if path.is_null() {
            return Err(null("path"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| domain("path is not valid UTF-8"))?;
        boxed(core(EigenvalueTable::ingest(path))?, out_table)
    })
}

/// Number of entries.
///
/// # Safety
/// `table` must be null or a live handle; `out_len` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn picard_table_len(table_: *const PicardTable, out_len: *mut usize) -> PicardStatus {
    guard(|| write(out_len, table(table_)?.len(), "out_len"))
}

/// `N(T) / weyl(T)`; requires `t > 1`.
///
/// # Safety
/// `table` must be null or a live handle; `out` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn picard_table_weyl_ratio(table_: *const PicardTable, t: f64, out: *mut f64) -> PicardStatus {
    guard(|| write(out, core(table(table_)?.weyl_ratio(t))?, "out"))
}

/// `|sum_{r_j <= t} x^{i r_j}|`.
///
/// # Safety
/// `table` must be null or a live handle; `out` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn picard_table_spectral_sum(
    table_: *const PicardTable,
    t: f64,
    x: f64,
    out: *mut f64,
) -> PicardStatus {
    guard(|| write(out, core(table(table_)?.spectral_sum(t, x))?.norm(), "out"))
}

/// `sum_j h±(r_j)` by direct summation; `out_tail` receives the bound on the
/// omitted tail and may be null.
///
/// # Safety
/// `table` must be null or a live handle; `out` null or valid for writes;
/// `out_tail` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn picard_table_sum_h(
    table_: *const PicardTable,
    radius: f64,
    eta: f64,
    sign: i32,
    out: *mut f64,
    out_tail: *mut f64,
) -> PicardStatus {
    guard(|| {
        let s = spec(radius, eta, sign)?;
        let sum = core(table(table_)?.sum_h_direct(&s))?;
        write(out, sum.value, "out")?;
        if !out_tail.is_null() {
            out_tail.write(sum.tail_estimate);
        }
        Ok(())
    })
}

/// Releases a table. Null is ignored.
///
/// # Safety
/// `table` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn picard_table_free(table: *mut PicardTable) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}
