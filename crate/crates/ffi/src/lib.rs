//! C ABI for `subcurv`.
//!
//! Every fallible function returns a [`SubcurvStatus`] and writes its result
//! through an out-pointer. Objects are opaque handles created by `*_new` /
//! `*_from_*` functions and released with the matching `*_free`. After a
//! failure, [`subcurv_last_error`] describes what went wrong on the calling
//! thread.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use nalgebra::Matrix4;
use subcurv::harness::{self, Report, SceneConfig};
use subcurv::{Environment, Error, Expr, VariableTable};

/// Result codes shared by all functions.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubcurvStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Malformed scene, expression or argument.
    Config = 3,
    /// A numerical precondition failed (singular frame, degenerate form, …).
    Numerical = 4,
    OutOfRange = 5,
    Panic = 6,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let s = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(s));
}

fn fail(status: SubcurvStatus, msg: impl Into<String>) -> SubcurvStatus {
    set_error(msg);
    status
}

fn from_error(e: Error) -> SubcurvStatus {
    let status = if e.is_config() { SubcurvStatus::Config } else { SubcurvStatus::Numerical };
    fail(status, e.to_string())
}

fn guard(f: impl FnOnce() -> SubcurvStatus) -> SubcurvStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(SubcurvStatus::Panic, "internal panic"),
    }
}

unsafe fn read_str<'a>(p: *const c_char) -> Result<&'a str, SubcurvStatus> {
    if p.is_null() {
        return Err(fail(SubcurvStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(SubcurvStatus::InvalidUtf8, "string argument is not UTF-8"))
}

macro_rules! try_ffi {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

macro_rules! non_null {
    ($($p:ident),+) => {
        $(if $p.is_null() {
            return fail(SubcurvStatus::NullPointer, concat!("`", stringify!($p), "` is null"));
        })+
    };
}

/// Message describing the last failure on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn subcurv_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn subcurv_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Frees a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn subcurv_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

// ---------------------------------------------------------------------------
// expressions

/// A parsed expression together with the ordered variable list it is
/// evaluated against.
pub struct SubcurvExpr {
    expr: Expr,
    vars: Vec<String>,
}

unsafe fn read_names(names: *const *const c_char, count: usize) -> Result<Vec<String>, SubcurvStatus> {
    if count > 0 && names.is_null() {
        return Err(fail(SubcurvStatus::NullPointer, "`names` is null"));
    }
    (0..count).map(|i| read_str(*names.add(i)).map(str::to_string)).collect()
}

/// Parses `text` over the variables `names[0..count]`.
///
/// # Safety
/// `text` and each `names[i]` must be valid NUL-terminated strings; `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn subcurv_expr_parse(
    text: *const c_char,
    names: *const *const c_char,
    count: usize,
    out: *mut *mut SubcurvExpr,
) -> SubcurvStatus {
    guard(|| {
        non_null!(out);
        let text = try_ffi!(read_str(text));
        let vars = try_ffi!(read_names(names, count));
        let table = match VariableTable::new(vars.iter().map(String::as_str)) {
            Ok(t) => t,
            Err(e) => return from_error(e),
        };
        match subcurv::expr::parse(text, &table) {
            Ok(expr) => {
                *out = Box::into_raw(Box::new(SubcurvExpr { expr, vars }));
                SubcurvStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Evaluates at `values[0..count]`, ordered like the parse-time names.
///
/// # Safety
/// `e` must be a live handle, `values` must hold `count` doubles and `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn subcurv_expr_eval(
    e: *const SubcurvExpr,
    values: *const f64,
    count: usize,
    out: *mut f64,
) -> SubcurvStatus {
    guard(|| {
        non_null!(e, out);
        let e = &*e;
        if count != e.vars.len() {
            return fail(
                SubcurvStatus::OutOfRange,
                format!("expected {} values, got {count}", e.vars.len()),
            );
        }
        if count > 0 && values.is_null() {
            return fail(SubcurvStatus::NullPointer, "`values` is null");
        }
        let mut env = Environment::new();
        for (i, n) in e.vars.iter().enumerate() {
            env.set(n, *values.add(i));
        }
        match e.expr.eval(&env) {
            Ok(v) => {
                *out = v;
                SubcurvStatus::Ok
            }
            Err(err) => from_error(err),
        }
    })
}

/// Symbolic derivative with respect to one of the parse-time variables.
///
/// # Safety
/// `e` must be a live handle, `var` a valid string, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn subcurv_expr_diff(
    e: *const SubcurvExpr,
    var: *const c_char,
    out: *mut *mut SubcurvExpr,
) -> SubcurvStatus {
    guard(|| {
        non_null!(e, out);
        let e = &*e;
        let var = try_ffi!(read_str(var));
        if !e.vars.iter().any(|v| v == var) {
            return fail(SubcurvStatus::Config, format!("unknown variable `{var}`"));
        }
        *out = Box::into_raw(Box::new(SubcurvExpr {
            expr: e.expr.diff(var),
            vars: e.vars.clone(),
        }));
        SubcurvStatus::Ok
    })
}

/// Renders the expression; free the result with [`subcurv_string_free`].
///
/// # Safety
/// `e` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn subcurv_expr_render(e: *const SubcurvExpr, out: *mut *mut c_char) -> SubcurvStatus {
    guard(|| {
        non_null!(e, out);
        *out = CString::new((*e).expr.to_string()).unwrap_or_default().into_raw();
        SubcurvStatus::Ok
    })
}

/// # Safety
/// `e` must be NULL or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn subcurv_expr_free(e: *mut SubcurvExpr) {
    if !e.is_null() {
        drop(Box::from_raw(e));
    }
}

// ---------------------------------------------------------------------------
// pointwise invariants

/// δ-invariant of a metric `g` and 2-form `omega` on a 4-space, both given
/// as 16 doubles in row-major order. Writes the sign (±1) and `tr(J²)/4`
/// for `J = g⁻¹Ω`; `compatible` receives 1 when Ω lies in the span
/// compatible with a family of null planes.
///
/// # Safety
/// `g` and `omega` must hold 16 doubles; the out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn subcurv_delta_invariant(
    g: *const f64,
    omega: *const f64,
    sign: *mut c_int,
    value: *mut f64,
    compatible: *mut c_int,
) -> SubcurvStatus {
    guard(|| {
        non_null!(g, omega, sign, value, compatible);
        let gm = Matrix4::from_row_slice(std::slice::from_raw_parts(g, 16));
        let om = Matrix4::from_row_slice(std::slice::from_raw_parts(omega, 16));
        match subcurv::symbol::delta_invariant(&gm, &om) {
            Ok(d) => {
                *sign = d.sign as c_int;
                *value = d.value;
                *compatible = d.family.is_some() as c_int;
                SubcurvStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

// ---------------------------------------------------------------------------
// scenes and reports

pub struct SubcurvScene {
    config: SceneConfig,
}

pub struct SubcurvReport {
    report: Report,
    names: Vec<CString>,
}

fn boxed_scene(r: subcurv::Result<SceneConfig>, out: *mut *mut SubcurvScene) -> SubcurvStatus {
    match r {
        Ok(config) => {
            unsafe { *out = Box::into_raw(Box::new(SubcurvScene { config })) };
            SubcurvStatus::Ok
        }
        Err(e) => from_error(e),
    }
}

/// Parses a scene from JSON text.
///
/// # Safety
/// `json` must be a valid string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn subcurv_scene_from_json(json: *const c_char, out: *mut *mut SubcurvScene) -> SubcurvStatus {
    guard(|| {
        non_null!(out);
        let text = try_ffi!(read_str(json));
        boxed_scene(SceneConfig::from_json(text), out)
    })
}

/// Loads one of the scenes shipped with the library, e.g. `"heavenly.scene"`.
///
/// # Safety
/// `name` must be a valid string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn subcurv_scene_bundled(name: *const c_char, out: *mut *mut SubcurvScene) -> SubcurvStatus {
    guard(|| {
        non_null!(out);
        let name = try_ffi!(read_str(name));
        match harness::bundled(name) {
            Some(text) => boxed_scene(SceneConfig::from_json(text), out),
            None => fail(SubcurvStatus::Config, format!("no bundled scene `{name}`")),
        }
    })
}

/// # Safety
/// `s` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn subcurv_scene_set_seed(s: *mut SubcurvScene, seed: u64) -> SubcurvStatus {
    guard(|| {
        non_null!(s);
        (*s).config.sample.seed = seed;
        SubcurvStatus::Ok
    })
}

/// # Safety
/// `s` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn subcurv_scene_set_count(s: *mut SubcurvScene, count: usize) -> SubcurvStatus {
    guard(|| {
        non_null!(s);
        if count == 0 {
            return fail(SubcurvStatus::OutOfRange, "sample count must be positive");
        }
        (*s).config.sample.count = count;
        SubcurvStatus::Ok
    })
}

/// # Safety
/// `s` must be NULL or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn subcurv_scene_free(s: *mut SubcurvScene) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Runs the scene's pipeline. Numerical failures at individual points are
/// part of the report, not an error status.
///
/// # Safety
/// `s` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn subcurv_run(s: *const SubcurvScene, out: *mut *mut SubcurvReport) -> SubcurvStatus {
    guard(|| {
        non_null!(s, out);
        match harness::run_scene(&(*s).config) {
            Ok(report) => {
                let names = report
                    .checks
                    .iter()
                    .map(|c| CString::new(c.name.clone()).unwrap_or_default())
                    .collect();
                *out = Box::into_raw(Box::new(SubcurvReport { report, names }));
                SubcurvStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Writes 1 when every check passed, else 0.
///
/// # Safety
/// `r` must be a live handle and `passed` writable.
#[no_mangle]
pub unsafe extern "C" fn subcurv_report_passed(r: *const SubcurvReport, passed: *mut c_int) -> SubcurvStatus {
    guard(|| {
        non_null!(r, passed);
        *passed = (*r).report.passed as c_int;
        SubcurvStatus::Ok
    })
}

/// # Safety
/// `r` must be a live handle and `count` writable.
#[no_mangle]
pub unsafe extern "C" fn subcurv_report_check_count(r: *const SubcurvReport, count: *mut usize) -> SubcurvStatus {
    guard(|| {
        non_null!(r, count);
        *count = (*r).report.checks.len();
        SubcurvStatus::Ok
    })
}

/// Details of check `index`. `name` borrows from the report and lives as long
/// as it does. Any out-pointer may be NULL to skip that field.
///
/// # Safety
/// `r` must be a live handle; non-NULL out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn subcurv_report_check(
    r: *const SubcurvReport,
    index: usize,
    name: *mut *const c_char,
    worst: *mut f64,
    tolerance: *mut f64,
    passed: *mut c_int,
) -> SubcurvStatus {
    guard(|| {
        non_null!(r);
        let r = &*r;
        let Some(c) = r.report.checks.get(index) else {
            return fail(
                SubcurvStatus::OutOfRange,
                format!("check {index} of {}", r.report.checks.len()),
            );
        };
        if !name.is_null() {
            *name = r.names[index].as_ptr();
        }
        if !worst.is_null() {
            *worst = c.worst;
        }
        if !tolerance.is_null() {
            *tolerance = c.tolerance;
        }
        if !passed.is_null() {
            *passed = c.passed as c_int;
        }
        SubcurvStatus::Ok
    })
}

/// The full report as JSON; free with [`subcurv_string_free`].
///
/// # Safety
/// `r` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn subcurv_report_json(r: *const SubcurvReport, out: *mut *mut c_char) -> SubcurvStatus {
    guard(|| {
        non_null!(r, out);
        *out = CString::new((*r).report.to_json()).unwrap_or_default().into_raw();
        SubcurvStatus::Ok
    })
}

/// # Safety
/// `r` must be NULL or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn subcurv_report_free(r: *mut SubcurvReport) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}
