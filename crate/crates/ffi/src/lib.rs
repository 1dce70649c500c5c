//! C interface to the `entropy_decay` experiment runner.
//!
//! Every entry point returns an [`EdStatus`]. On failure the message is kept
//! per thread and read with [`ed_last_error_message`]. Strings handed out by
//! the library are released with [`ed_string_free`]; handles with their own
//! `*_free` function. Passing null to a free function is a no-op.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use entropy_decay::experiment::{self, ExperimentConfig, ExperimentError, RunReport, Verb};

/// Result codes. The first four coincide with the command-line exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdStatus {
    Ok = 0,
    /// The run finished but a verdict failed, or a precondition (such as the
    /// nonlinearity condition) does not hold.
    VerdictFailed = 2,
    ConfigError = 3,
    NumericalError = 4,
    InvalidArgument = 5,
    IoError = 6,
    Panic = 7,
}

/// A parsed and validated scenario.
pub struct EdConfig {
    inner: ExperimentConfig,
}

/// The result of one run.
pub struct EdReport {
    inner: RunReport,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &ExperimentError) -> EdStatus {
    match e {
        ExperimentError::Io(_) => EdStatus::IoError,
        ExperimentError::Stage { source, .. } => status_of(source),
        _ => match e.exit_code() {
            experiment::EXIT_VERDICT => EdStatus::VerdictFailed,
            experiment::EXIT_NUMERICAL => EdStatus::NumericalError,
            _ => EdStatus::ConfigError,
        },
    }
}

fn fail(e: ExperimentError) -> EdStatus {
    let status = status_of(&e);
    set_error(e.to_string());
    status
}

fn invalid(msg: &str) -> EdStatus {
    set_error(msg);
    EdStatus::InvalidArgument
}

/// Runs `f` with the panic boundary and error bookkeeping every entry point
/// shares.
fn guard(f: impl FnOnce() -> EdStatus) -> EdStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            EdStatus::Panic
        }
    }
}

/// # Safety
/// `s` is null or a valid NUL-terminated string.
unsafe fn read_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, EdStatus> {
    if s.is_null() {
        return Err(invalid(&format!("{what} is null")));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| invalid(&format!("{what} is not valid UTF-8")))
}

fn hand_out(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).map(CString::into_raw).unwrap_or(ptr::null_mut())
}

fn parse_verb(s: &str) -> Result<Verb, EdStatus> {
    s.parse::<Verb>().map_err(fail)
}

fn verdict_status(report: &RunReport) -> EdStatus {
    if report.passed() {
        EdStatus::Ok
    } else {
        let failed: Vec<&str> = report
            .verdicts
            .iter()
            .filter(|v| !v.passed)
            .map(|v| v.name.as_str())
            .collect();
        set_error(format!("failed verdicts: {}", failed.join(", ")));
        EdStatus::VerdictFailed
    }
}

/// The library version as a static string; never freed.
#[no_mangle]
pub extern "C" fn ed_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// The message of the last failed call on this thread, or null. The pointer
/// stays valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn ed_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` is null or was returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ed_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses and validates a JSON scenario.
///
/// # Safety
/// `json` is a NUL-terminated string; `out` is a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ed_config_from_json(json: *const c_char, out: *mut *mut EdConfig) -> EdStatus {
    guard(|| {
        if out.is_null() {
            return invalid("out is null");
        }
        *out = ptr::null_mut();
        let text = match read_str(json, "json") {
            Ok(t) => t,
            Err(s) => return s,
        };
        match ExperimentConfig::from_json(text).and_then(|c| c.with_overrides(None, None)) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(EdConfig { inner }));
                EdStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Replaces the seed (also used for lattice draws).
///
/// # Safety
/// `config` is a live handle.
#[no_mangle]
pub unsafe extern "C" fn ed_config_set_seed(config: *mut EdConfig, seed: u64) -> EdStatus {
    guard(|| {
        let Some(c) = config.as_mut() else {
            return invalid("config is null");
        };
        match c.inner.clone().with_overrides(Some(seed), None) {
            Ok(inner) => {
                c.inner = inner;
                EdStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Divides the cell width by `factor`.
///
/// # Safety
/// `config` is a live handle.
#[no_mangle]
pub unsafe extern "C" fn ed_config_refine(config: *mut EdConfig, factor: f64) -> EdStatus {
    guard(|| {
        let Some(c) = config.as_mut() else {
            return invalid("config is null");
        };
        match c.inner.clone().with_overrides(None, Some(factor)) {
            Ok(inner) => {
                c.inner = inner;
                EdStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `config` is null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ed_config_free(config: *mut EdConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Runs the command named `verb` (`decay`, `periodic-decay`,
/// `counterexample`, `pipeline`, `check-gn`, `lattice-cert`). When the run
/// completes `*out` receives a report even if a verdict failed, in which case
/// the status is `VerdictFailed`.
///
/// # Safety
/// `config` is a live handle, `verb` a NUL-terminated string and `out` a
/// valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ed_run(config: *const EdConfig, verb: *const c_char, out: *mut *mut EdReport) -> EdStatus {
    guard(|| {
        if out.is_null() {
            return invalid("out is null");
        }
        *out = ptr::null_mut();
        let Some(c) = config.as_ref() else {
            return invalid("config is null");
        };
        let verb = match read_str(verb, "verb").and_then(parse_verb) {
            Ok(v) => v,
            Err(s) => return s,
        };
        match experiment::run(verb, &c.inner) {
            Ok(inner) => {
                let status = verdict_status(&inner);
                *out = Box::into_raw(Box::new(EdReport { inner }));
                status
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `report` is null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ed_report_free(report: *mut EdReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// 1 when every verdict passed, 0 otherwise or for a null handle.
///
/// # Safety
/// `report` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ed_report_passed(report: *const EdReport) -> i32 {
    report.as_ref().map_or(0, |r| r.inner.passed() as i32)
}

/// Number of verdicts, 0 for a null handle.
///
/// # Safety
/// `report` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ed_report_verdict_count(report: *const EdReport) -> usize {
    report.as_ref().map_or(0, |r| r.inner.verdicts.len())
}

/// Name and outcome of verdict `index`. The name is a new string for
/// [`ed_string_free`].
///
/// # Safety
/// `report` is a live handle; `name` and `passed` are valid pointers.
#[no_mangle]
pub unsafe extern "C" fn ed_report_verdict(
    report: *const EdReport,
    index: usize,
    name: *mut *mut c_char,
    passed: *mut i32,
) -> EdStatus {
    guard(|| {
        let Some(r) = report.as_ref() else {
            return invalid("report is null");
        };
        if name.is_null() || passed.is_null() {
            return invalid("output pointer is null");
        }
        let Some(v) = r.inner.verdicts.get(index) else {
            return invalid(&format!("verdict index {index} out of range"));
        };
        *name = hand_out(v.name.clone());
        *passed = v.passed as i32;
        EdStatus::Ok
    })
}

/// Looks up a named scalar of the report summary.
///
/// # Safety
/// `report` is a live handle, `key` a NUL-terminated string, `value` a valid
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn ed_report_summary_value(
    report: *const EdReport,
    key: *const c_char,
    value: *mut f64,
) -> EdStatus {
    guard(|| {
        let Some(r) = report.as_ref() else {
            return invalid("report is null");
        };
        if value.is_null() {
            return invalid("value is null");
        }
        let key = match read_str(key, "key") {
            Ok(k) => k,
            Err(s) => return s,
        };
        match r.inner.summary.get(key) {
            Some(v) => {
                *value = *v;
                EdStatus::Ok
            }
            None => invalid(&format!("no summary value {key:?}")),
        }
    })
}

/// The report as JSON, a new string for [`ed_string_free`].
///
/// # Safety
/// `report` is a live handle; `json` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ed_report_to_json(report: *const EdReport, json: *mut *mut c_char) -> EdStatus {
    guard(|| {
        let Some(r) = report.as_ref() else {
            return invalid("report is null");
        };
        if json.is_null() {
            return invalid("json is null");
        }
        match serde_json::to_string(&r.inner) {
            Ok(s) => {
                *json = hand_out(s);
                EdStatus::Ok
            }
            Err(e) => {
                set_error(format!("report serialisation: {e}"));
                EdStatus::IoError
            }
        }
    })
}

/// Writes `report.json`, `series.csv` and the plots and state files under
/// `out_dir`.
///
/// # Safety
/// `report` is a live handle; `out_dir` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ed_report_write(report: *const EdReport, out_dir: *const c_char) -> EdStatus {
    guard(|| {
        let Some(r) = report.as_ref() else {
            return invalid("report is null");
        };
        let dir = match read_str(out_dir, "out_dir") {
            Ok(d) => d,
            Err(s) => return s,
        };
        match experiment::write_outputs(&r.inner, Path::new(dir)) {
            Ok(()) => EdStatus::Ok,
            Err(e) => fail(e),
        }
    })
}

/// One-call form of the command line: parses `config_json`, applies `seed`
/// when it is nonnegative, runs `verb`, writes the outputs when `out_dir` is
/// not null, and stores the report JSON in `*report_json` (null when `report_json`
/// is null or the run did not complete).
///
/// # Safety
/// `verb` and `config_json` are NUL-terminated strings; `out_dir` is null or
/// NUL-terminated; `report_json` is null or a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ed_run_command(
    verb: *const c_char,
    config_json: *const c_char,
    out_dir: *const c_char,
    seed: i64,
    report_json: *mut *mut c_char,
) -> EdStatus {
    guard(|| {
        if !report_json.is_null() {
            *report_json = ptr::null_mut();
        }
        let verb = match read_str(verb, "verb").and_then(parse_verb) {
            Ok(v) => v,
            Err(s) => return s,
        };
        let text = match read_str(config_json, "config_json") {
            Ok(t) => t,
            Err(s) => return s,
        };
        let dir = if out_dir.is_null() {
            None
        } else {
            match read_str(out_dir, "out_dir") {
                Ok(d) => Some(d),
                Err(s) => return s,
            }
        };
        let seed = (seed >= 0).then_some(seed as u64);
        let config = match ExperimentConfig::from_json(text).and_then(|c| c.with_overrides(seed, None)) {
            Ok(c) => c,
            Err(e) => return fail(e),
        };
        let report = match experiment::run(verb, &config) {
            Ok(r) => r,
            Err(e) => return fail(e),
        };
        if let Some(dir) = dir {
            if let Err(e) = experiment::write_outputs(&report, Path::new(dir)) {
                return fail(e);
            }
        }
        if !report_json.is_null() {
            match serde_json::to_string(&report) {
                Ok(s) => *report_json = hand_out(s),
                Err(e) => {
                    set_error(format!("report serialisation: {e}"));
                    return EdStatus::IoError;
                }
            }
        }
        verdict_status(&report)
    })
}
