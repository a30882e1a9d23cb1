//! C ABI over `cf-core`.
//!
//! Circuits cross the boundary as opaque `CfCircuit` handles owned by the
//! caller and released with `cf_circuit_free`. Strings returned through
//! `char **` out-parameters are NUL-terminated UTF-8 and released with
//! `cf_string_free`. Every fallible call returns a `CfStatus`; on failure
//! `cf_last_error` describes the error on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use cf_core::circuit::{count_parse_trees, parse_circuit, print_circuit};
use cf_core::field::{verify_equivalent, CheckConfig};
use cf_core::generators::{gen_comb, gen_det, gen_perm};
use cf_core::passes::{reduce_to_depth4_with, PipelineConfig};
use cf_core::poly::expand_outputs;
use cf_core::{Circuit, Error};

/// Result codes of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Contract = 4,
    Parameter = 5,
    Overflow = 6,
    Internal = 7,
}

/// Opaque circuit handle.
pub struct CfCircuit {
    inner: Circuit,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    let c = CString::new(msg).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> CfStatus {
    match e {
        Error::Parse { .. } | Error::Invalid(_) => CfStatus::Parse,
        Error::Contract { .. } | Error::Structure(_) => CfStatus::Contract,
        Error::Parameter(_) | Error::Config(_) | Error::MissingVariable(_) => CfStatus::Parameter,
        Error::TermBudget { .. }
        | Error::EnumerationOverflow { .. }
        | Error::ClosureOverflow { .. } => CfStatus::Overflow,
        Error::UnknownGate(_) | Error::Generation { .. } => CfStatus::Internal,
    }
}

fn fail(e: Error) -> CfStatus {
    set_error(e.to_string());
    status_of(&e)
}

/// Runs `f`, turning panics into `Internal` and recording error messages.
fn guard(f: impl FnOnce() -> Result<(), CfStatus>) -> CfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CfStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic");
            CfStatus::Internal
        }
    }
}

fn null_error(what: &str) -> CfStatus {
    set_error(format!("{what} is null"));
    CfStatus::NullPointer
}

unsafe fn circuit_ref<'a>(c: *const CfCircuit, what: &str) -> Result<&'a Circuit, CfStatus> {
    // SAFETY: caller passes a handle obtained from this library or null.
    unsafe { c.as_ref() }
        .map(|c| &c.inner)
        .ok_or_else(|| null_error(what))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), CfStatus> {
    if out.is_null() {
        return Err(null_error(what));
    }
    // SAFETY: non-null out-parameter supplied by the caller.
    unsafe { out.write(value) };
    Ok(())
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> Result<(), CfStatus> {
    let c = CString::new(s).map_err(|_| {
        set_error("string contains NUL");
        CfStatus::Internal
    })?;
    unsafe { write_out(out, c.into_raw(), "out") }
}

unsafe fn write_circuit(out: *mut *mut CfCircuit, c: Circuit) -> Result<(), CfStatus> {
    let handle = Box::into_raw(Box::new(CfCircuit { inner: c }));
    // SAFETY: on failure the handle was never published and is reclaimed.
    unsafe { write_out(out, handle, "out") }.inspect_err(|_| drop(unsafe { Box::from_raw(handle) }))
}

/// Parses the text circuit format into a new handle.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cf_circuit_parse(
    text: *const c_char,
    out: *mut *mut CfCircuit,
) -> CfStatus {
    guard(|| {
        if text.is_null() {
            return Err(null_error("text"));
        }
        // SAFETY: checked non-null; caller guarantees NUL termination.
        let s = unsafe { CStr::from_ptr(text) }.to_str().map_err(|e| {
            set_error(format!("text is not UTF-8: {e}"));
            CfStatus::InvalidUtf8
        })?;
        let c = parse_circuit(s).map_err(fail)?;
        unsafe { write_circuit(out, c) }
    })
}

/// Prints a circuit in the text format.
///
/// # Safety
/// `c` must be a live handle or null; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cf_circuit_to_text(
    c: *const CfCircuit,
    out: *mut *mut c_char,
) -> CfStatus {
    guard(|| {
        let c = unsafe { circuit_ref(c, "circuit") }?;
        unsafe { write_string(out, print_circuit(c)) }
    })
}

/// Size, degree, variables, depth, gate counts and fan-ins as JSON.
///
/// # Safety
/// `c` must be a live handle or null; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cf_circuit_stats_json(
    c: *const CfCircuit,
    out: *mut *mut c_char,
) -> CfStatus {
    guard(|| {
        let c = unsafe { circuit_ref(c, "circuit") }?;
        let json = serde_json::to_string(&c.stats()).map_err(|e| {
            set_error(e.to_string());
            CfStatus::Internal
        })?;
        unsafe { write_string(out, json) }
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `c` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cf_circuit_free(c: *mut CfCircuit) {
    if !c.is_null() {
        // SAFETY: handle created by Box::into_raw in this library.
        drop(unsafe { Box::from_raw(c) });
    }
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must be null or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cf_string_free(s: *mut c_char) {
    if !s.is_null() {
        // SAFETY: string created by CString::into_raw in this library.
        drop(unsafe { CString::from_raw(s) });
    }
}

unsafe fn generated(out: *mut *mut CfCircuit, c: cf_core::Result<Circuit>) -> CfStatus {
    guard(|| {
        let c = c.map_err(fail)?;
        unsafe { write_circuit(out, c) }
    })
}

/// Permanent of an `n x n` matrix of variables, `1 <= n <= 5`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cf_gen_perm(n: u32, out: *mut *mut CfCircuit) -> CfStatus {
    unsafe { generated(out, gen_perm(n)) }
}

/// Determinant of an `n x n` matrix of variables, `1 <= n <= 5`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cf_gen_det(n: u32, out: *mut *mut CfCircuit) -> CfStatus {
    unsafe { generated(out, gen_det(n)) }
}

/// Right-nested product of `n >= 2` variables.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cf_gen_comb(n: u32, out: *mut *mut CfCircuit) -> CfStatus {
    unsafe { generated(out, gen_comb(n)) }
}

/// Reduces a single-output circuit to depth four. `a = 0` picks the split
/// parameter automatically. When `report` is non-null it receives the pass
/// report as JSON.
///
/// # Safety
/// `c` must be a live handle or null; `out` a valid pointer; `report` null
/// or a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cf_reduce_to_depth4(
    c: *const CfCircuit,
    a: u32,
    out: *mut *mut CfCircuit,
    report: *mut *mut c_char,
) -> CfStatus {
    guard(|| {
        let c = unsafe { circuit_ref(c, "circuit") }?;
        if out.is_null() {
            return Err(null_error("out"));
        }
        let config = PipelineConfig {
            a: (a != 0).then_some(a),
            ..PipelineConfig::default()
        };
        let (r, rep) = reduce_to_depth4_with(c, &config).map_err(fail)?;
        if !report.is_null() {
            let json = serde_json::to_string(&rep).map_err(|e| {
                set_error(e.to_string());
                CfStatus::Internal
            })?;
            unsafe { write_string(report, json) }?;
        }
        unsafe { write_circuit(out, r) }
    })
}

/// Compares two circuits output by output, exactly when both expand within
/// the default term budget and otherwise at random points drawn from
/// `seed`.
///
/// # Safety
/// `a`, `b` must be live handles or null; `equal` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cf_equivalent(
    a: *const CfCircuit,
    b: *const CfCircuit,
    seed: u64,
    equal: *mut bool,
) -> CfStatus {
    guard(|| {
        let a = unsafe { circuit_ref(a, "a") }?;
        let b = unsafe { circuit_ref(b, "b") }?;
        let cfg = CheckConfig {
            seed,
            ..CheckConfig::default()
        };
        let v = verify_equivalent(a, b, &cfg).map_err(fail)?;
        unsafe { write_out(equal, v.equal, "equal") }
    })
}

/// Total number of parse trees over all outputs, in decimal.
///
/// # Safety
/// `c` must be a live handle or null; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cf_count_parse_trees(
    c: *const CfCircuit,
    out: *mut *mut c_char,
) -> CfStatus {
    guard(|| {
        let c = unsafe { circuit_ref(c, "circuit") }?;
        unsafe { write_string(out, count_parse_trees(c).to_string()) }
    })
}

/// Exact expansion of every output, one polynomial per line.
///
/// # Safety
/// `c` must be a live handle or null; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cf_expand(
    c: *const CfCircuit,
    term_budget: usize,
    out: *mut *mut c_char,
) -> CfStatus {
    guard(|| {
        let c = unsafe { circuit_ref(c, "circuit") }?;
        let polys = expand_outputs(c, term_budget).map_err(fail)?;
        let text: Vec<String> = polys.iter().map(|p| p.to_string()).collect();
        unsafe { write_string(out, text.join("\n")) }
    })
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}
