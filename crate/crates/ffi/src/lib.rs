//! C ABI over `heun-core`.
//!
//! Every entry point returns a [`HeunStatus`]; results go through out
//! pointers. Parameter sets and transformation tables are opaque handles
//! created and freed here. On failure the message of the last error on the
//! calling thread is available from [`heun_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use heun_core::verify::{rk_start, RK_TOL};
use heun_core::{
    frobenius_coeffs, frobenius_eval, load_transformation_table, ode_residual, parse_transformation_table,
    residual_scale, rk_oracle, transformed_eval, trf_eval_infinite, trf_extract_coeffs, Branch, BranchKind,
    ErrorClass, HeunError, HeunParams, SeriesControl, SeriesValue, TransformationRecord, TrfTruncation,
};

/// Outcome of a call. Nonzero codes 1..=3 match the CLI exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeunStatus {
    Ok = 0,
    Usage = 1,
    Domain = 2,
    Convergence = 3,
    NullPointer = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeunBranch {
    First = 0,
    Second = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeunMethod {
    Frobenius = 0,
    Trf = 1,
    Rk = 2,
}

/// A point value. Fields a method does not produce are NaN (`terms_used` 0).
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeunValue {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
    pub error_estimate: f64,
    pub terms_used: usize,
}

impl From<SeriesValue> for HeunValue {
    fn from(v: SeriesValue) -> Self {
        HeunValue {
            value: v.value,
            d1: v.d1,
            d2: v.d2,
            error_estimate: v.error_estimate,
            terms_used: v.terms_used,
        }
    }
}

/// Opaque validated parameter set.
pub struct HeunParamsHandle(HeunParams);

/// Opaque list of transformation records.
pub struct HeunTableHandle(Vec<TransformationRecord>);

enum Failure {
    Heun(HeunError),
    Null(&'static str),
}

impl From<HeunError> for Failure {
    fn from(e: HeunError) -> Self {
        Failure::Heun(e)
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> HeunStatus {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HeunStatus::Ok,
        Ok(Err(Failure::Heun(e))) => {
            set_last_error(e.to_string());
            match e.class() {
                ErrorClass::Usage => HeunStatus::Usage,
                ErrorClass::Domain => HeunStatus::Domain,
                ErrorClass::Convergence => HeunStatus::Convergence,
            }
        }
        Ok(Err(Failure::Null(what))) => {
            set_last_error(format!("null pointer: {what}"));
            HeunStatus::NullPointer
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            HeunStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn write<T>(p: *mut T, v: T, what: &'static str) -> Result<(), Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    p.write(v);
    Ok(())
}

unsafe fn utf8<'a>(s: *const c_char, what: &'static str) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(Failure::Null(what));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|e| HeunError::Usage(format!("{what} is not UTF-8: {e}")).into())
}

fn branch_of(kind: HeunBranch, p: &HeunParams) -> Result<Branch, HeunError> {
    Branch::new(
        match kind {
            HeunBranch::First => BranchKind::First,
            HeunBranch::Second => BranchKind::Second,
        },
        p,
    )
}

/// Message of the last failed call on this thread, or null after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn heun_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Validates a parameter set; `epsilon` is derived. Free with
/// [`heun_params_free`].
///
/// # Safety
/// `out` must be valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn heun_params_new(
    a: f64,
    q: f64,
    alpha: f64,
    beta: f64,
    gamma: f64,
    delta: f64,
    out: *mut *mut HeunParamsHandle,
) -> HeunStatus {
    guard(|| {
        let p = HeunParams::new(a, q, alpha, beta, gamma, delta)?;
        write(out, Box::into_raw(Box::new(HeunParamsHandle(p))), "out")
    })
}

/// # Safety
/// `params` must come from [`heun_params_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn heun_params_free(params: *mut HeunParamsHandle) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

/// # Safety
/// `params` must be a live handle and `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn heun_params_epsilon(params: *const HeunParamsHandle, out: *mut f64) -> HeunStatus {
    guard(|| {
        let p = deref(params, "params")?;
        write(out, p.0.epsilon(), "out")
    })
}

/// Evaluates the local solution of the given branch at `x` with default
/// controls.
///
/// # Safety
/// `params` must be a live handle and `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn heun_eval(
    params: *const HeunParamsHandle,
    branch: HeunBranch,
    method: HeunMethod,
    x: f64,
    out: *mut HeunValue,
) -> HeunStatus {
    guard(|| {
        let p = &deref(params, "params")?.0;
        let b = branch_of(branch, p)?;
        let v = match method {
            HeunMethod::Frobenius => frobenius_eval(p, &b, x, &SeriesControl::default())?.into(),
            HeunMethod::Trf => trf_eval_infinite(p, &b, x, &TrfTruncation::default())?.into(),
            HeunMethod::Rk => HeunValue {
                value: rk_oracle(p, &b, x, rk_start(x), RK_TOL)?,
                d1: f64::NAN,
                d2: f64::NAN,
                error_estimate: f64::NAN,
                terms_used: 0,
            },
        };
        write(out, v, "out")
    })
}

/// Writes the power-series coefficients `c_0..=c_order` of the branch into
/// `out`, which must hold `order + 1` values (`len`). `method` is
/// `Frobenius` or `Trf`.
///
/// # Safety
/// `params` must be a live handle and `out` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn heun_coeffs(
    params: *const HeunParamsHandle,
    branch: HeunBranch,
    method: HeunMethod,
    order: usize,
    out: *mut f64,
    len: usize,
) -> HeunStatus {
    guard(|| {
        let p = &deref(params, "params")?.0;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        if len < order.saturating_add(1) {
            return Err(HeunError::Usage(format!("buffer of {len} cannot hold {} coefficients", order + 1)).into());
        }
        let b = branch_of(branch, p)?;
        let c = match method {
            HeunMethod::Frobenius => frobenius_coeffs(p, &b, order)?.c,
            HeunMethod::Trf => trf_extract_coeffs(p, &b, order)?,
            HeunMethod::Rk => {
                return Err(HeunError::Usage("coefficients are produced by frobenius or trf only".into()).into())
            }
        };
        std::slice::from_raw_parts_mut(out, c.len()).copy_from_slice(&c);
        Ok(())
    })
}

/// Residual of the equation at `x` for a candidate `(y, y', y'')`, and the
/// scale it should be judged against.
///
/// # Safety
/// `params` must be a live handle; `residual` and `scale` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn heun_residual(
    params: *const HeunParamsHandle,
    x: f64,
    y: f64,
    d1: f64,
    d2: f64,
    residual: *mut f64,
    scale: *mut f64,
) -> HeunStatus {
    guard(|| {
        let p = &deref(params, "params")?.0;
        let r = ode_residual(p, x, y, d1, d2)?;
        write(residual, r, "residual")?;
        write(scale, residual_scale(p, x, y, d1, d2), "scale")
    })
}

/// Loads a JSON transformation table from a file. Free with
/// [`heun_table_free`].
///
/// # Safety
/// `path` must be a nul-terminated string and `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn heun_table_load(path: *const c_char, out: *mut *mut HeunTableHandle) -> HeunStatus {
    guard(|| {
        let records = load_transformation_table(utf8(path, "path")?)?;
        write(out, Box::into_raw(Box::new(HeunTableHandle(records))), "out")
    })
}

/// Parses a JSON transformation table from text.
///
/// # Safety
/// `json` must be a nul-terminated string and `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn heun_table_parse(json: *const c_char, out: *mut *mut HeunTableHandle) -> HeunStatus {
    guard(|| {
        let records = parse_transformation_table(utf8(json, "json")?)?;
        write(out, Box::into_raw(Box::new(HeunTableHandle(records))), "out")
    })
}

/// # Safety
/// `table` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn heun_table_free(table: *mut HeunTableHandle) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}

/// Number of records in the table; 0 for a null handle.
///
/// # Safety
/// `table` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn heun_table_len(table: *const HeunTableHandle) -> usize {
    table.as_ref().map_or(0, |t| t.0.len())
}

/// Evaluates record `index` of the table applied to `params` at `x`:
/// `prefactor(x) · H(params'; m(x))` by the infinite-series form.
///
/// # Safety
/// `table` and `params` must be live handles and `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn heun_transformed_eval(
    table: *const HeunTableHandle,
    index: usize,
    params: *const HeunParamsHandle,
    branch: HeunBranch,
    x: f64,
    out: *mut HeunValue,
) -> HeunStatus {
    guard(|| {
        let t = deref(table, "table")?;
        let p = &deref(params, "params")?.0;
        let rec = t.0.get(index).ok_or_else(|| {
            HeunError::Usage(format!("record {index} out of range for a table of {}", t.0.len()))
        })?;
        let kind = match branch {
            HeunBranch::First => BranchKind::First,
            HeunBranch::Second => BranchKind::Second,
        };
        let v = transformed_eval(rec, p, kind, x, &TrfTruncation::default())?;
        write(out, v.into(), "out")
    })
}
