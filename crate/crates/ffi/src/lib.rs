//! C ABI over the thermal model and the trial harness.
//!
//! Every function returns a [`TcStatus`]; results go through out-pointers.
//! On failure the message is kept per thread and read with
//! [`tc_last_error_message`]. Handles are opaque and owned by the caller
//! once returned, to be released with the matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use thermocut::harness::{run_trial, Calibration, FailureCause, ScenarioFile, TrialConfig, TrialResult};
use thermocut::thermal_field::{self, ThermalParams};
use thermocut::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Io = 4,
    Singularity = 5,
    Numerical = 6,
    OutOfRange = 7,
    Panic = 8,
}

/// Tissue and source parameters in SI units, temperatures in degC.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct TcThermalParams {
    pub lambda: f64,
    pub rho: f64,
    pub c: f64,
    pub q_hat: f64,
    pub d_cut: f64,
    pub t0: f64,
    pub tc: f64,
}

/// Outcome of a finished trial. `failure_cause` is 0 for success, then
/// 1 deflection, 2 filter divergence, 3 timeout.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct TcTrialSummary {
    pub success: bool,
    pub failure_cause: u32,
    /// NaN on success.
    pub failure_position: f64,
    pub peak_deflection: f64,
    pub deflection_rmse: f64,
    pub trace_len: usize,
    pub optimizer_calls: usize,
}

/// One control tick; same fields and units as the CSV trace.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct TcTraceRow {
    pub t: f64,
    pub position: f64,
    pub velocity: f64,
    pub true_deflection: f64,
    pub est_deflection: f64,
    pub width: f64,
    pub predicted_width: f64,
    pub q_hat: f64,
    pub c: f64,
    pub lambda: f64,
    pub rho: f64,
    pub c_defl_hat: f64,
    pub d_max_hat: f64,
}

/// Opaque trial configuration.
pub struct TcTrialConfig(TrialConfig);

/// Opaque trial result.
pub struct TcTrialResult(TrialResult);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> TcStatus {
    match e {
        Error::Domain { .. } => TcStatus::InvalidArgument,
        Error::Config(_) => TcStatus::Config,
        Error::Io(_) => TcStatus::Io,
        Error::Singularity => TcStatus::Singularity,
        Error::OutOfRange { .. } => TcStatus::OutOfRange,
        _ => TcStatus::Numerical,
    }
}

/// Runs `f`, recording any error or panic as the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), (TcStatus, String)>) -> TcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TcStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            TcStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (TcStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (TcStatus, String) {
    (TcStatus::NullPointer, format!("{what} is null"))
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, (TcStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (TcStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn write<T>(out: *mut T, v: T, what: &str) -> Result<(), (TcStatus, String)> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(v);
    Ok(())
}

fn params(p: &TcThermalParams) -> Result<ThermalParams, (TcStatus, String)> {
    ThermalParams::new(p.lambda, p.rho, p.c, p.q_hat, p.d_cut)
        .and_then(|t| t.with_temperatures(p.t0, p.tc))
        .map_err(lib_err)
}

/// Message of the last failed call on this thread, or null if none. Valid
/// until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn tc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Modified Bessel function of the second kind, order zero, for `x > 0`.
///
/// # Safety
/// `out` must be null or valid for a write.
#[no_mangle]
pub unsafe extern "C" fn tc_bessel_k0(x: f64, out: *mut f64) -> TcStatus {
    guard(|| write(out, thermal_field::bessel_k0(x).map_err(lib_err)?, "out"))
}

/// Width (m) of the `tc` isotherm behind a source moving at `u` m/s.
///
/// # Safety
/// `p` must be null or point to a valid struct; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn tc_isotherm_width(u: f64, p: *const TcThermalParams, out: *mut f64) -> TcStatus {
    guard(|| {
        let p = params(p.as_ref().ok_or_else(|| null("params"))?)?;
        write(out, thermal_field::isotherm_width(u, &p).map_err(lib_err)?, "out")
    })
}

/// Temperature (degC) at `(xi, y)` metres from a source moving at `u` m/s
/// along +xi.
///
/// # Safety
/// `p` must be null or point to a valid struct; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn tc_temperature_at(
    xi: f64,
    y: f64,
    u: f64,
    p: *const TcThermalParams,
    out: *mut f64,
) -> TcStatus {
    guard(|| {
        let p = params(p.as_ref().ok_or_else(|| null("params"))?)?;
        write(out, thermal_field::temperature_at(xi, y, u, &p).map_err(lib_err)?, "out")
    })
}

/// Builds a trial from scenario TOML. `calibration_toml` may be null, in
/// which case the scenario's own `calibration` path (relative to the
/// working directory) or the shipped calibration is used.
///
/// # Safety
/// String arguments must be null or NUL-terminated; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn tc_trial_config_from_toml(
    scenario_toml: *const c_char,
    calibration_toml: *const c_char,
    out: *mut *mut TcTrialConfig,
) -> TcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let scenario = ScenarioFile::from_toml(c_str(scenario_toml, "scenario_toml")?).map_err(lib_err)?;
        let cal = if calibration_toml.is_null() {
            match &scenario.calibration {
                Some(path) => Calibration::from_file(Path::new(path)).map_err(lib_err)?,
                None => Calibration::default(),
            }
        } else {
            Calibration::from_toml(c_str(calibration_toml, "calibration_toml")?).map_err(lib_err)?
        };
        let mut cfg = TrialConfig::new(&cal, scenario.controller, scenario.phantom, scenario.seed).map_err(lib_err)?;
        if let Some(len) = scenario.cut_length {
            cfg.cut_length = len;
            cfg.validate().map_err(lib_err)?;
        }
        out.write(Box::into_raw(Box::new(TcTrialConfig(cfg))));
        Ok(())
    })
}

/// # Safety
/// `cfg` must be null or a handle from [`tc_trial_config_from_toml`] not
/// yet freed.
#[no_mangle]
pub unsafe extern "C" fn tc_trial_config_free(cfg: *mut TcTrialConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Overrides the seed of a configured trial.
///
/// # Safety
/// `cfg` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tc_trial_config_set_seed(cfg: *mut TcTrialConfig, seed: u64) -> TcStatus {
    guard(|| {
        let cfg = cfg.as_mut().ok_or_else(|| null("cfg"))?;
        cfg.0.seed = seed;
        Ok(())
    })
}

/// Runs the trial to completion. A failed cut is a successful call; see
/// [`TcTrialSummary`].
///
/// # Safety
/// `cfg` must be null or a live handle; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn tc_run_trial(cfg: *const TcTrialConfig, out: *mut *mut TcTrialResult) -> TcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let cfg = cfg.as_ref().ok_or_else(|| null("cfg"))?;
        let r = run_trial(&cfg.0).map_err(lib_err)?;
        out.write(Box::into_raw(Box::new(TcTrialResult(r))));
        Ok(())
    })
}

/// # Safety
/// `r` must be null or a live handle; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn tc_trial_result_summary(r: *const TcTrialResult, out: *mut TcTrialSummary) -> TcStatus {
    guard(|| {
        let r = &r.as_ref().ok_or_else(|| null("result"))?.0;
        let cause = match r.failure_cause {
            None => 0,
            Some(FailureCause::Deflection) => 1,
            Some(FailureCause::FilterDivergence) => 2,
            Some(FailureCause::Timeout) => 3,
        };
        let s = TcTrialSummary {
            success: r.success,
            failure_cause: cause,
            failure_position: r.failure_position.unwrap_or(f64::NAN),
            peak_deflection: r.peak_deflection(),
            deflection_rmse: r.deflection_rmse(),
            trace_len: r.traces.len(),
            optimizer_calls: r.optimizer_calls,
        };
        write(out, s, "out")
    })
}

/// Row `index` of the trace.
///
/// # Safety
/// `r` must be null or a live handle; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn tc_trial_result_trace_row(
    r: *const TcTrialResult,
    index: usize,
    out: *mut TcTraceRow,
) -> TcStatus {
    guard(|| {
        let r = &r.as_ref().ok_or_else(|| null("result"))?.0;
        let row = r.traces.get(index).ok_or_else(|| {
            (TcStatus::OutOfRange, format!("row {index} of {}", r.traces.len()))
        })?;
        let v = TcTraceRow {
            t: row.t,
            position: row.position,
            velocity: row.velocity,
            true_deflection: row.true_deflection,
            est_deflection: row.est_deflection,
            width: row.width,
            predicted_width: row.predicted_width,
            q_hat: row.q_hat,
            c: row.c,
            lambda: row.lambda,
            rho: row.rho,
            c_defl_hat: row.c_defl_hat,
            d_max_hat: row.d_max_hat,
        };
        write(out, v, "out")
    })
}

/// # Safety
/// `r` must be null or a handle from [`tc_run_trial`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tc_trial_result_free(r: *mut TcTrialResult) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}
