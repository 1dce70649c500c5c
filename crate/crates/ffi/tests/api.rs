use std::ffi::{c_char, CStr, CString};
use std::ptr;

use entropy_decay_ffi::*;

const CHECK_GN_AFFINE: &str = r#"{
  "schema_version": 1,
  "flux": {"components": [{"affine": {"slope": 2.0}}], "u_range": [-2.0, 2.0]},
  "initial": {"kind": "zero", "dim": 1}
}"#;

const SHORT_DECAY: &str = r#"{
  "schema_version": 1,
  "seed": 5,
  "flux": {"components": [{"power": {"coeff": 0.5, "exponent": 2.0, "parity": "even"}}], "u_range": [-2.0, 2.0]},
  "initial": {"kind": "box", "lo": [0.0], "hi": [1.0]},
  "grid": {"h": 0.02},
  "decay": {"t_end": 2.0, "series_every": 5, "monotone_after": 1.0},
  "outputs": {"plots": false}
}"#;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let p = ed_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

unsafe fn take(s: *mut c_char) -> String {
    assert!(!s.is_null());
    let out = CStr::from_ptr(s).to_str().unwrap().to_owned();
    ed_string_free(s);
    out
}

#[test]
fn version_is_static() {
    let v = unsafe { CStr::from_ptr(ed_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn handle_lifecycle_runs_decay() {
    unsafe {
        let mut cfg = ptr::null_mut();
        assert_eq!(ed_config_from_json(c(SHORT_DECAY).as_ptr(), &mut cfg), EdStatus::Ok);
        assert_eq!(ed_config_set_seed(cfg, 99), EdStatus::Ok);

        let mut report = ptr::null_mut();
        assert_eq!(ed_run(cfg, c("decay").as_ptr(), &mut report), EdStatus::Ok);
        assert_eq!(ed_report_passed(report), 1);
        let n = ed_report_verdict_count(report);
        assert!(n > 0);
        for i in 0..n {
            let mut name = ptr::null_mut();
            let mut passed = 0;
            assert_eq!(ed_report_verdict(report, i, &mut name, &mut passed), EdStatus::Ok);
            assert!(!take(name).is_empty());
            assert_eq!(passed, 1);
        }
        let mut name = ptr::null_mut();
        let mut passed = 0;
        assert_eq!(ed_report_verdict(report, n, &mut name, &mut passed), EdStatus::InvalidArgument);

        let mut json = ptr::null_mut();
        assert_eq!(ed_report_to_json(report, &mut json), EdStatus::Ok);
        let v: serde_json::Value = serde_json::from_str(&take(json)).unwrap();
        assert_eq!(v["seed"], 99);
        assert_eq!(v["command"], "decay");

        let key = v["summary"].as_object().unwrap().keys().next().unwrap().clone();
        let mut x = f64::NAN;
        assert_eq!(ed_report_summary_value(report, c(&key).as_ptr(), &mut x), EdStatus::Ok);
        assert_eq!(x, v["summary"][&key].as_f64().unwrap());
        assert_eq!(
            ed_report_summary_value(report, c("no such key").as_ptr(), &mut x),
            EdStatus::InvalidArgument
        );

        let dir = tempfile::tempdir().unwrap();
        let out = c(dir.path().to_str().unwrap());
        assert_eq!(ed_report_write(report, out.as_ptr()), EdStatus::Ok);
        assert!(dir.path().join("report.json").exists());
        assert!(dir.path().join("series.csv").exists());

        ed_report_free(report);
        ed_config_free(cfg);
    }
}

#[test]
fn precondition_failure_maps_to_verdict_status() {
    unsafe {
        let mut json = ptr::null_mut();
        let status = ed_run_command(
            c("check-gn").as_ptr(),
            c(CHECK_GN_AFFINE).as_ptr(),
            ptr::null(),
            -1,
            &mut json,
        );
        assert_eq!(status, EdStatus::VerdictFailed);
        assert!(last_error().contains("failed verdicts"));
        let v: serde_json::Value = serde_json::from_str(&take(json)).unwrap();
        assert_eq!(v["gn"]["verdict"], "fails");
    }
}

#[test]
fn run_command_writes_outputs_and_applies_seed() {
    let dir = tempfile::tempdir().unwrap();
    unsafe {
        let mut json = ptr::null_mut();
        let status = ed_run_command(
            c("decay").as_ptr(),
            c(SHORT_DECAY).as_ptr(),
            c(dir.path().to_str().unwrap()).as_ptr(),
            17,
            &mut json,
        );
        assert_eq!(status, EdStatus::Ok);
        let v: serde_json::Value = serde_json::from_str(&take(json)).unwrap();
        assert_eq!(v["seed"], 17);
    }
    let header = std::fs::read_to_string(dir.path().join("series.csv")).unwrap();
    assert!(header.starts_with("t,x_norm"));
}

#[test]
fn bad_inputs_are_reported() {
    unsafe {
        let mut cfg = ptr::null_mut();
        assert_eq!(ed_config_from_json(ptr::null(), &mut cfg), EdStatus::InvalidArgument);
        assert!(cfg.is_null());
        assert!(last_error().contains("null"));

        assert_eq!(ed_config_from_json(c("{\"flux\": 1}").as_ptr(), &mut cfg), EdStatus::ConfigError);
        assert!(cfg.is_null());
        assert!(!last_error().is_empty());

        assert_eq!(ed_config_from_json(c(SHORT_DECAY).as_ptr(), &mut cfg), EdStatus::Ok);
        assert!(ed_last_error_message().is_null());
        assert_eq!(ed_config_refine(cfg, -1.0), EdStatus::ConfigError);

        let mut report = ptr::null_mut();
        assert_eq!(ed_run(cfg, c("nope").as_ptr(), &mut report), EdStatus::ConfigError);
        assert!(report.is_null());
        assert_eq!(ed_run(ptr::null(), c("decay").as_ptr(), &mut report), EdStatus::InvalidArgument);
        ed_config_free(cfg);

        let bad = [0xffu8, 0];
        let mut json = ptr::null_mut();
        let status = ed_run_command(bad.as_ptr().cast(), c(SHORT_DECAY).as_ptr(), ptr::null(), -1, &mut json);
        assert_eq!(status, EdStatus::InvalidArgument);
        assert!(json.is_null());

        // null frees are no-ops
        ed_config_free(ptr::null_mut());
        ed_report_free(ptr::null_mut());
        ed_string_free(ptr::null_mut());
        assert_eq!(ed_report_passed(ptr::null()), 0);
        assert_eq!(ed_report_verdict_count(ptr::null()), 0);
    }
}

#[test]
fn errors_are_per_thread() {
    unsafe {
        let mut cfg = ptr::null_mut();
        assert_eq!(ed_config_from_json(ptr::null(), &mut cfg), EdStatus::InvalidArgument);
    }
    let other = std::thread::spawn(|| ed_last_error_message().is_null()).join().unwrap();
    assert!(other);
    assert!(!ed_last_error_message().is_null());
}
