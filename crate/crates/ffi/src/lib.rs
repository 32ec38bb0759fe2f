//! C interface to the scanner.
//!
//! Handles are opaque; every fallible call returns a [`SecriskStatus`] and
//! leaves a message for [`secrisk_last_error_message`]. Strings handed out
//! by the library are released with [`secrisk_string_free`].

use secrisk_core::category::{jaro_winkler, ratcliff_obershelp, Sensitivity};
use secrisk_core::config::{ScanConfig, Source};
use secrisk_core::ease::EaseLevel;
use secrisk_core::error::Error;
use secrisk_core::pipeline::Scanner;
use secrisk_core::report::emit_json;
use secrisk_core::risk::{compute_risk, scale_ease, scale_value};
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SecriskStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    InvalidConfig = 4,
    Io = 5,
    InvalidData = 6,
    Panic = 7,
}

/// Scan configuration; create with [`secrisk_scanner_new`].
pub struct SecriskScanner {
    config: ScanConfig,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn fail(status: SecriskStatus, msg: impl Into<String>) -> SecriskStatus {
    set_error(msg);
    status
}

fn from_core(e: Error) -> SecriskStatus {
    let status = match &e {
        Error::Io { .. } => SecriskStatus::Io,
        Error::Config(_) => SecriskStatus::InvalidConfig,
        Error::Data(_) => SecriskStatus::InvalidData,
    };
    fail(status, e.to_string())
}

fn guard(f: impl FnOnce() -> SecriskStatus) -> SecriskStatus {
    set_error("");
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(SecriskStatus::Panic, "internal panic"),
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, SecriskStatus> {
    if p.is_null() {
        return Err(fail(SecriskStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(SecriskStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

macro_rules! tri {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

/// Create a scanner for the repository at `root`.
///
/// # Safety
/// `root` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn secrisk_scanner_new(root: *const c_char, out: *mut *mut SecriskScanner) -> SecriskStatus {
    guard(|| {
        if out.is_null() {
            return fail(SecriskStatus::NullPointer, "out is null");
        }
        let root = tri!(text(root, "root"));
        *out = Box::into_raw(Box::new(SecriskScanner { config: ScanConfig::new(root) }));
        SecriskStatus::Ok
    })
}

/// Set one configuration key, as `--set key=value` would.
///
/// # Safety
/// `scanner` must come from [`secrisk_scanner_new`]; strings must be
/// NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn secrisk_scanner_set(scanner: *mut SecriskScanner, key: *const c_char, value: *const c_char) -> SecriskStatus {
    guard(|| {
        let Some(s) = scanner.as_mut() else { return fail(SecriskStatus::NullPointer, "scanner is null") };
        let key = tri!(text(key, "key"));
        let value = tri!(text(value, "value"));
        match s.config.apply(key, value, Source::Cli, None) {
            Ok(()) => SecriskStatus::Ok,
            Err(e) => from_core(e),
        }
    })
}

/// Run the scan and return the JSON report in `*json_out`. `exit_code_out`
/// (optional) receives 0, or 2 when a finding reaches the alert threshold.
///
/// # Safety
/// `scanner` must come from [`secrisk_scanner_new`]; `json_out` must be
/// writable. Free the report with [`secrisk_string_free`].
#[no_mangle]
pub unsafe extern "C" fn secrisk_scanner_run(scanner: *const SecriskScanner, json_out: *mut *mut c_char, exit_code_out: *mut i32) -> SecriskStatus {
    guard(|| {
        let Some(s) = scanner.as_ref() else { return fail(SecriskStatus::NullPointer, "scanner is null") };
        if json_out.is_null() {
            return fail(SecriskStatus::NullPointer, "json_out is null");
        }
        let report = match Scanner::new(s.config.clone()).run() {
            Ok(r) => r,
            Err(e) => return from_core(e),
        };
        let json = emit_json(&report, s.config.reveal_secrets);
        *json_out = CString::new(json).map(CString::into_raw).unwrap_or(ptr::null_mut());
        if !exit_code_out.is_null() {
            *exit_code_out = report.exit_code();
        }
        SecriskStatus::Ok
    })
}

/// # Safety
/// `scanner` must come from [`secrisk_scanner_new`] and not be used again.
#[no_mangle]
pub unsafe extern "C" fn secrisk_scanner_free(scanner: *mut SecriskScanner) {
    if !scanner.is_null() {
        drop(Box::from_raw(scanner));
    }
}

/// # Safety
/// `s` must be a string returned by this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn secrisk_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message for the last failed call on this thread; empty after success.
/// Valid until the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn secrisk_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Score for a value level (`HIGH`, `MODERATE`, `LOW`, `UNSPECIFIED`) and
/// an ease level (`EASY`, `MODERATE`, `DIFFICULT`, `VERY_DIFFICULT`) on the
/// standard scales.
///
/// # Safety
/// Strings must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn secrisk_risk_score(value: *const c_char, ease: *const c_char, out: *mut u32) -> SecriskStatus {
    guard(|| {
        if out.is_null() {
            return fail(SecriskStatus::NullPointer, "out is null");
        }
        let v = tri!(text(value, "value"));
        let e = tri!(text(ease, "ease"));
        let Some(v) = Sensitivity::parse(v) else { return fail(SecriskStatus::InvalidArgument, format!("unknown value level `{v}`")) };
        let Some(e) = EaseLevel::parse(e) else { return fail(SecriskStatus::InvalidArgument, format!("unknown ease level `{e}`")) };
        *out = compute_risk(scale_value(v), scale_ease(e));
        SecriskStatus::Ok
    })
}

/// Jaro-Winkler and Ratcliff-Obershelp similarity of two strings; either
/// output pointer may be null.
///
/// # Safety
/// Strings must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn secrisk_similarity(a: *const c_char, b: *const c_char, jaro_winkler_out: *mut f64, ratcliff_out: *mut f64) -> SecriskStatus {
    guard(|| {
        let a = tri!(text(a, "a"));
        let b = tri!(text(b, "b"));
        if !jaro_winkler_out.is_null() {
            *jaro_winkler_out = jaro_winkler(a, b);
        }
        if !ratcliff_out.is_null() {
            *ratcliff_out = ratcliff_obershelp(a, b);
        }
        SecriskStatus::Ok
    })
}

/// Library version; static, do not free.
#[no_mangle]
pub extern "C" fn secrisk_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}
