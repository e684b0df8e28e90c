use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use thermocut_ffi::*;

const SCENARIO: &str = r#"
name = "short"
phantom = "step_2mm"
seed = 4
cut_length = 0.02

[controller]
kind = "thermo"
"#;

fn params() -> TcThermalParams {
    TcThermalParams { lambda: 0.5, rho: 1090.0, c: 3421.0, q_hat: 30.0, d_cut: 0.002, t0: 37.0, tc: 60.0 }
}

fn last_error() -> String {
    let p = tc_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned()
}

#[test]
fn scalar_functions() {
    let mut k0 = 0.0;
    assert_eq!(unsafe { tc_bessel_k0(1.0, &mut k0) }, TcStatus::Ok);
    assert!((k0 - 0.421_024_438_240_708_3).abs() < 1e-12);

    assert_eq!(unsafe { tc_bessel_k0(-1.0, &mut k0) }, TcStatus::InvalidArgument);
    assert!(!last_error().is_empty());
    assert_eq!(unsafe { tc_bessel_k0(1.0, ptr::null_mut()) }, TcStatus::NullPointer);
    assert_eq!(last_error(), "out is null");

    let p = params();
    let (mut w_slow, mut w_fast) = (0.0, 0.0);
    assert_eq!(unsafe { tc_isotherm_width(0.003, &p, &mut w_slow) }, TcStatus::Ok);
    assert_eq!(unsafe { tc_isotherm_width(0.012, &p, &mut w_fast) }, TcStatus::Ok);
    assert!(w_slow > w_fast && w_fast > 0.0);
    assert_eq!(unsafe { tc_isotherm_width(0.003, ptr::null(), &mut w_slow) }, TcStatus::NullPointer);

    let mut t = 0.0;
    assert_eq!(unsafe { tc_temperature_at(-0.001, 0.0, 0.007, &p, &mut t) }, TcStatus::Ok);
    assert!(t > p.t0);
    let bad = TcThermalParams { lambda: -1.0, ..p };
    assert_eq!(unsafe { tc_temperature_at(0.0, 0.001, 0.007, &bad, &mut t) }, TcStatus::InvalidArgument);
}

#[test]
fn trial_round_trip() {
    let scenario = CString::new(SCENARIO).unwrap();
    let mut cfg = ptr::null_mut();
    assert_eq!(unsafe { tc_trial_config_from_toml(scenario.as_ptr(), ptr::null(), &mut cfg) }, TcStatus::Ok);
    assert!(!cfg.is_null());
    assert_eq!(unsafe { tc_trial_config_set_seed(cfg, 9) }, TcStatus::Ok);

    let mut res = ptr::null_mut();
    assert_eq!(unsafe { tc_run_trial(cfg, &mut res) }, TcStatus::Ok);
    let mut s = std::mem::MaybeUninit::<TcTrialSummary>::uninit();
    assert_eq!(unsafe { tc_trial_result_summary(res, s.as_mut_ptr()) }, TcStatus::Ok);
    let s = unsafe { s.assume_init() };
    assert!(s.success);
    assert_eq!(s.failure_cause, 0);
    assert!(s.failure_position.is_nan());
    assert!(s.trace_len > 0);
    assert_eq!(s.optimizer_calls, s.trace_len);

    let mut row = std::mem::MaybeUninit::<TcTraceRow>::uninit();
    assert_eq!(unsafe { tc_trial_result_trace_row(res, s.trace_len - 1, row.as_mut_ptr()) }, TcStatus::Ok);
    let row = unsafe { row.assume_init() };
    assert!(row.position >= 0.02);
    let mut unused = std::mem::MaybeUninit::<TcTraceRow>::uninit();
    assert_eq!(unsafe { tc_trial_result_trace_row(res, s.trace_len, unused.as_mut_ptr()) }, TcStatus::OutOfRange);
    assert!(last_error().contains("of"));

    unsafe {
        tc_trial_result_free(res);
        tc_trial_config_free(cfg);
        tc_trial_result_free(ptr::null_mut());
        tc_trial_config_free(ptr::null_mut());
    }
}

#[test]
fn config_errors() {
    let mut cfg = ptr::null_mut();
    assert_eq!(unsafe { tc_trial_config_from_toml(ptr::null(), ptr::null(), &mut cfg) }, TcStatus::NullPointer);
    let bad = CString::new("name = \"x\"\nbogus = 1\n").unwrap();
    assert_eq!(unsafe { tc_trial_config_from_toml(bad.as_ptr(), ptr::null(), &mut cfg) }, TcStatus::Config);
    assert!(cfg.is_null());
    let scenario = CString::new(SCENARIO).unwrap();
    let cal = CString::new("not [ toml").unwrap();
    assert_eq!(unsafe { tc_trial_config_from_toml(scenario.as_ptr(), cal.as_ptr(), &mut cfg) }, TcStatus::Config);
    assert_eq!(unsafe { tc_run_trial(ptr::null(), &mut ptr::null_mut()) }, TcStatus::NullPointer);
    assert_eq!(unsafe { tc_trial_config_set_seed(ptr::null_mut(), 1) }, TcStatus::NullPointer);
}

const C_SMOKE: &str = r#"
#include <math.h>
#include <stdio.h>
#include "thermocut.h"

int main(void) {
    double k0 = 0.0;
    if (tc_bessel_k0(1.0, &k0) != TC_STATUS_OK || fabs(k0 - 0.4210244382407083) > 1e-12) return 1;
    if (tc_bessel_k0(1.0, NULL) != TC_STATUS_NULL_POINTER) return 2;
    if (tc_last_error_message() == NULL) return 3;
    TcTrialConfig *cfg = NULL;
    const char *scenario = "name = \"c\"\nphantom = \"flat\"\nseed = 1\ncut_length = 0.01\n[controller]\nkind = \"thermo\"\n";
    if (tc_trial_config_from_toml(scenario, NULL, &cfg) != TC_STATUS_OK) return 4;
    TcTrialResult *res = NULL;
    if (tc_run_trial(cfg, &res) != TC_STATUS_OK) return 5;
    TcTrialSummary s;
    if (tc_trial_result_summary(res, &s) != TC_STATUS_OK || !s.success || s.trace_len == 0) return 6;
    tc_trial_result_free(res);
    tc_trial_config_free(cfg);
    printf("ok %zu\n", s.trace_len);
    return 0;
}
"#;

/// Compiles a small C program against the generated header and the static
/// library. Skipped when no C compiler or static archive is available.
#[test]
fn c_program_links_against_header() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header = manifest.join("include/thermocut.h");
    assert!(header.exists(), "header not generated");
    // target/<profile>/deps/<test binary>
    let profile_dir = std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf();
    let lib = profile_dir.join("libthermocut_ffi.a");
    if !lib.exists() || Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: no cc or {}", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    let exe = dir.path().join("smoke");
    std::fs::write(&src, C_SMOKE).unwrap();
    let build = Command::new("cc")
        .arg("-std=c99")
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&src)
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&exe)
        .output()
        .unwrap();
    assert!(build.status.success(), "{}", String::from_utf8_lossy(&build.stderr));
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "exit {:?}", run.status.code());
    assert!(String::from_utf8_lossy(&run.stdout).starts_with("ok "));
}
