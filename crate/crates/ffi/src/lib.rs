//! C ABI over `smd-core`.
//!
//! Every fallible function returns an [`SmdStatus`] and writes its result
//! through an out-pointer. On failure the message is available from
//! [`smd_last_error`] on the same thread until the next failing call.
//! Targets and tables are opaque handles released with their `_free`
//! functions.
//!
//! Pointer arguments must be null or valid for the access the function
//! makes: handles live until freed, strings NUL-terminated, arrays at least
//! as long as the length passed with them. Null is reported as
//! `SMD_STATUS_NULL_POINTER` rather than dereferenced.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use smd_core::basis::{szasz_weight, truncation_index, BasisPoint, TruncationSpec};
use smd_core::moments::{central_moment, raw_moment};
use smd_core::operator::{apply, apply_truncated, kernel_cdf, kernel_value, OperatorValue, SequenceRule};
use smd_core::quadrature::QuadratureConfig;
use smd_core::report::{make_error_table, ErrorTable};
use smd_core::target::{ExpPolyTerm, TargetFunction};
use smd_core::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmdStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    DivergentIntegral = 3,
    ConvergenceFailure = 4,
    Overflow = 5,
    Parse = 6,
    Io = 7,
    Panic = 8,
}

impl From<&Error> for SmdStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Domain(_) => SmdStatus::Domain,
            Error::DivergentIntegral { .. } => SmdStatus::DivergentIntegral,
            Error::ConvergenceFailure(_) => SmdStatus::ConvergenceFailure,
            Error::Overflow(_) => SmdStatus::Overflow,
            Error::Parse(_) => SmdStatus::Parse,
            Error::Io(_) => SmdStatus::Io,
        }
    }
}

/// A target function `g`.
pub struct SmdTarget(TargetFunction);

/// An evaluated error table.
pub struct SmdTable(ErrorTable);

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SmdOperatorValue {
    pub value: f64,
    pub series_terms_used: u64,
    pub last_index: u64,
    pub tail_mass: f64,
    pub tail_bound: f64,
    pub inner_integral_error: f64,
}

impl From<OperatorValue> for SmdOperatorValue {
    fn from(v: OperatorValue) -> Self {
        Self {
            value: v.value,
            series_terms_used: v.series_terms_used,
            last_index: v.last_index,
            tail_mass: v.tail_mass,
            tail_bound: v.tail_bound,
            inner_integral_error: v.inner_integral_error,
        }
    }
}

/// One table cell; `ok` is 0 when the cell failed to evaluate and the
/// numeric fields are NaN.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SmdTableCell {
    pub x: f64,
    pub n: u64,
    pub u_n: f64,
    pub operator_value: f64,
    pub g_value: f64,
    pub abs_error: f64,
    pub ok: i32,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: SmdStatus, msg: impl Into<String>) -> SmdStatus {
    set_error(msg.into());
    status
}

// Handles are never mutated, so a panic cannot leave one half-updated.
fn guard(f: impl FnOnce() -> Result<(), SmdStatus>) -> SmdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SmdStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(SmdStatus::Panic, "internal panic"),
    }
}

fn lift<T>(r: smd_core::Result<T>) -> Result<T, SmdStatus> {
    r.map_err(|e| fail(SmdStatus::from(&e), e.to_string()))
}

fn out_ref<'a, T>(p: *mut T) -> Result<&'a mut T, SmdStatus> {
    // SAFETY: the caller passes either null or a valid, writable pointer.
    unsafe { p.as_mut() }.ok_or_else(|| fail(SmdStatus::NullPointer, "null output pointer"))
}

fn target_ref<'a>(p: *const SmdTarget) -> Result<&'a TargetFunction, SmdStatus> {
    // SAFETY: non-null handles come from smd_target_* and are live until freed.
    unsafe { p.as_ref() }.map(|t| &t.0).ok_or_else(|| fail(SmdStatus::NullPointer, "null target handle"))
}

fn str_arg<'a>(p: *const c_char) -> Result<&'a str, SmdStatus> {
    if p.is_null() {
        return Err(fail(SmdStatus::NullPointer, "null string argument"));
    }
    // SAFETY: non-null, NUL-terminated per the API contract.
    unsafe { CStr::from_ptr(p) }.to_str().map_err(|_| fail(SmdStatus::Parse, "string argument is not UTF-8"))
}

fn slice_arg<'a, T>(p: *const T, len: usize) -> Result<&'a [T], SmdStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(SmdStatus::NullPointer, "null array argument"));
    }
    // SAFETY: non-null and valid for `len` elements per the API contract.
    Ok(unsafe { std::slice::from_raw_parts(p, len) })
}

fn trunc_from_eps(eps: f64) -> TruncationSpec {
    if eps > 0.0 {
        TruncationSpec::TailEpsilon(eps)
    } else {
        TruncationSpec::default()
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn smd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failure on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn smd_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Looks up a built-in target (`x2e2x`, `negx3e5x`, `one`, `t`, `t2`,
/// `expneg`, `abs1`) or parses a `coeff:power:rate[;...]` literal.
#[no_mangle]
pub unsafe extern "C" fn smd_target_parse(spec: *const c_char, out: *mut *mut SmdTarget) -> SmdStatus {
    guard(|| {
        let out = out_ref(out)?;
        let g = lift(TargetFunction::parse(str_arg(spec)?))?;
        *out = Box::into_raw(Box::new(SmdTarget(g)));
        Ok(())
    })
}

/// `Σ_i coeffs[i] t^powers[i] e^{rates[i] t}`.
#[no_mangle]
pub unsafe extern "C" fn smd_target_exp_poly(
    coeffs: *const f64,
    powers: *const u32,
    rates: *const f64,
    len: usize,
    out: *mut *mut SmdTarget,
) -> SmdStatus {
    guard(|| {
        let out = out_ref(out)?;
        let (c, p, r) = (slice_arg(coeffs, len)?, slice_arg(powers, len)?, slice_arg(rates, len)?);
        if len == 0 || c.iter().chain(r).any(|v| !v.is_finite()) {
            return Err(fail(SmdStatus::Domain, "need at least one term with finite coefficients and rates"));
        }
        let terms = (0..len).map(|i| ExpPolyTerm::new(c[i], p[i], r[i])).collect();
        *out = Box::into_raw(Box::new(SmdTarget(TargetFunction::ExpPolySum(terms))));
        Ok(())
    })
}

/// Releases a target; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn smd_target_free(target: *mut SmdTarget) {
    if !target.is_null() {
        // SAFETY: created by Box::into_raw in this crate and not yet freed.
        drop(unsafe { Box::from_raw(target) });
    }
}

#[no_mangle]
pub unsafe extern "C" fn smd_target_eval(target: *const SmdTarget, t: f64, out: *mut f64) -> SmdStatus {
    guard(|| {
        *out_ref(out)? = target_ref(target)?.eval(t);
        Ok(())
    })
}

/// `B*(g;x)`; `eps <= 0` selects the default tail epsilon.
#[no_mangle]
pub unsafe extern "C" fn smd_apply(
    target: *const SmdTarget,
    u: f64,
    x: f64,
    eps: f64,
    out: *mut SmdOperatorValue,
) -> SmdStatus {
    guard(|| {
        let out = out_ref(out)?;
        let g = target_ref(target)?;
        *out = lift(apply(g, u, x, trunc_from_eps(eps), &QuadratureConfig::default()))?.into();
        Ok(())
    })
}

/// `B*(g;x)` with the series cut after index `j_max`.
#[no_mangle]
pub unsafe extern "C" fn smd_apply_truncated(
    target: *const SmdTarget,
    u: f64,
    x: f64,
    j_max: u64,
    out: *mut SmdOperatorValue,
) -> SmdStatus {
    guard(|| {
        let out = out_ref(out)?;
        let g = target_ref(target)?;
        *out = lift(apply_truncated(g, u, x, j_max, &QuadratureConfig::default()))?.into();
        Ok(())
    })
}

/// `s_{u,j}(x) = e^{-ux} (ux)^j / j!`.
#[no_mangle]
pub unsafe extern "C" fn smd_szasz_weight(u: f64, j: u64, x: f64, out: *mut f64) -> SmdStatus {
    guard(|| {
        let out = out_ref(out)?;
        *out = lift(BasisPoint::new(u, j, x).and_then(szasz_weight))?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn smd_truncation_index(u: f64, x: f64, eps: f64, out: *mut u64) -> SmdStatus {
    guard(|| {
        let out = out_ref(out)?;
        *out = lift(truncation_index(u, x, eps))?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn smd_kernel_value(u: f64, x: f64, t: f64, out: *mut f64) -> SmdStatus {
    guard(|| {
        let out = out_ref(out)?;
        *out = lift(kernel_value(u, x, t, TruncationSpec::default()))?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn smd_kernel_cdf(u: f64, x: f64, y: f64, out: *mut f64) -> SmdStatus {
    guard(|| {
        let out = out_ref(out)?;
        *out = lift(kernel_cdf(u, x, y, TruncationSpec::default()))?;
        Ok(())
    })
}

/// `B*(t^m; x)`.
#[no_mangle]
pub unsafe extern "C" fn smd_raw_moment(u: f64, x: f64, m: u32, out: *mut f64) -> SmdStatus {
    guard(|| {
        let out = out_ref(out)?;
        *out = lift(raw_moment(u, x, m as usize))?;
        Ok(())
    })
}

/// `B*((t − x)^m; x)`.
#[no_mangle]
pub unsafe extern "C" fn smd_central_moment(u: f64, x: f64, m: u32, out: *mut f64) -> SmdStatus {
    guard(|| {
        let out = out_ref(out)?;
        *out = lift(central_moment(u, x, m as usize))?;
        Ok(())
    })
}

/// `u_n` for a rule written as `n`, `n1.5`, `n2`, `n^p` or
/// `explicit:u1,u2,...`.
#[no_mangle]
pub unsafe extern "C" fn smd_sequence_value(rule: *const c_char, n: u64, out: *mut f64) -> SmdStatus {
    guard(|| {
        let out = out_ref(out)?;
        *out = lift(SequenceRule::parse(str_arg(rule)?).and_then(|r| r.value(n)))?;
        Ok(())
    })
}

/// Evaluates `|B*(g;x) − g(x)|` on the grid `xs × ns` at `u = u_n`.
/// Cells are stored row-major in `(x, n)`.
#[no_mangle]
pub unsafe extern "C" fn smd_table_new(
    target: *const SmdTarget,
    rule: *const c_char,
    xs: *const f64,
    xs_len: usize,
    ns: *const u64,
    ns_len: usize,
    eps: f64,
    out: *mut *mut SmdTable,
) -> SmdStatus {
    guard(|| {
        let out = out_ref(out)?;
        let g = target_ref(target)?;
        let rule = lift(SequenceRule::parse(str_arg(rule)?))?;
        let t = lift(make_error_table(g, &rule, slice_arg(xs, xs_len)?, slice_arg(ns, ns_len)?, trunc_from_eps(eps)))?;
        *out = Box::into_raw(Box::new(SmdTable(t)));
        Ok(())
    })
}

/// Number of cells; 0 for null.
#[no_mangle]
pub unsafe extern "C" fn smd_table_len(table: *const SmdTable) -> usize {
    // SAFETY: null or a live handle from smd_table_new.
    unsafe { table.as_ref() }.map_or(0, |t| t.0.cells.len())
}

#[no_mangle]
pub unsafe extern "C" fn smd_table_cell(table: *const SmdTable, index: usize, out: *mut SmdTableCell) -> SmdStatus {
    guard(|| {
        let out = out_ref(out)?;
        // SAFETY: null or a live handle from smd_table_new.
        let t = unsafe { table.as_ref() }.ok_or_else(|| fail(SmdStatus::NullPointer, "null table handle"))?;
        let c = t.0.cells.get(index).ok_or_else(|| {
            fail(SmdStatus::Domain, format!("cell index {index} out of range ({} cells)", t.0.cells.len()))
        })?;
        *out = SmdTableCell {
            x: c.x,
            n: c.n,
            u_n: c.u_n,
            operator_value: c.operator_value,
            g_value: c.g_value,
            abs_error: c.abs_error,
            ok: c.error.is_none() as i32,
        };
        Ok(())
    })
}

/// Writes the table as CSV (`x,n,u_n,operator_value,g_value,abs_error`).
#[no_mangle]
pub unsafe extern "C" fn smd_table_write_csv(table: *const SmdTable, path: *const c_char) -> SmdStatus {
    guard(|| {
        // SAFETY: null or a live handle from smd_table_new.
        let t = unsafe { table.as_ref() }.ok_or_else(|| fail(SmdStatus::NullPointer, "null table handle"))?;
        let path = Path::new(str_arg(path)?);
        let file = std::fs::File::create(path).map_err(|e| fail(SmdStatus::Io, e.to_string()))?;
        lift(t.0.write_csv(std::io::BufWriter::new(file)))
    })
}

/// Releases a table; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn smd_table_free(table: *mut SmdTable) {
    if !table.is_null() {
        // SAFETY: created by Box::into_raw in this crate and not yet freed.
        drop(unsafe { Box::from_raw(table) });
    }
}
