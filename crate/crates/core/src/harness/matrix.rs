//! Suites of trials and their CSV output.
//!
//! Every number is written in SI units with nine significant digits
//! (`{:.8e}`), so reruns with the same seeds are byte-identical.

use super::config::{Calibration, ControllerSpec, PhantomKind, SuiteFile};
use super::metrics::{success_rate, trial_rejection};
use super::trial::{run_trial, TraceRow, TrialConfig, TrialResult};
use crate::error::Result;
use std::fmt::Write as _;
use std::path::Path;

pub const SUMMARY_FILE: &str = "summary.csv";
pub const TRIALS_FILE: &str = "trials.csv";
pub const TRACE_DIR: &str = "traces";

pub const SUMMARY_HEADER: &str = "controller,phantom,trials,successes,success_rate,mean_peak_deflection_m,\
mean_deflection_m,mean_width_m,d_deflection,d_width,mean_deflection_rmse_m,mean_velocity_m_s";

pub const TRIALS_HEADER: &str = "label,controller,phantom,seed,success,failure_cause,failure_position_m,\
peak_deflection_m,mean_deflection_m,mean_width_m,d_deflection,d_width,deflection_rmse_m,optimizer_calls";

/// Formats a number with nine significant digits; non-finite values as `nan`.
pub fn fmt_num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.8e}")
    } else {
        "nan".into()
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "nan".into(), fmt_num)
}

/// Per-trial trace as CSV text.
pub fn trace_csv(r: &TrialResult) -> String {
    let mut s = String::with_capacity(64 + r.traces.len() * 300);
    s.push_str(TraceRow::HEADER);
    s.push('\n');
    for row in &r.traces {
        let vals: Vec<String> = row.values().iter().map(|&v| fmt_num(v)).collect();
        s.push_str(&vals.join(","));
        s.push('\n');
    }
    s
}

/// Aggregates over the trials of one controller/phantom cell.
#[derive(Debug, Clone)]
pub struct CellSummary {
    pub controller: ControllerSpec,
    pub phantom: PhantomKind,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub mean_peak_deflection: f64,
    pub mean_deflection: f64,
    pub mean_width: f64,
    pub d_deflection: Option<f64>,
    pub d_width: Option<f64>,
    pub mean_deflection_rmse: f64,
    pub mean_velocity: f64,
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

fn mean_opt(v: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let m = mean(v.flatten());
    m.is_finite().then_some(m)
}

impl CellSummary {
    pub fn from_results(controller: ControllerSpec, phantom: PhantomKind, results: &[TrialResult]) -> Result<Self> {
        let rate = success_rate(results)?;
        Ok(Self {
            controller,
            phantom,
            trials: results.len(),
            successes: results.iter().filter(|r| r.success).count(),
            success_rate: rate,
            mean_peak_deflection: mean(results.iter().map(TrialResult::peak_deflection)),
            mean_deflection: mean(results.iter().map(|r| r.mean_of(|x| x.true_deflection))),
            mean_width: mean(results.iter().map(|r| r.mean_of(|x| x.width))),
            d_deflection: mean_opt(results.iter().map(|r| trial_rejection(r, |x| x.true_deflection))),
            d_width: mean_opt(results.iter().map(|r| trial_rejection(r, |x| x.width))),
            mean_deflection_rmse: mean(results.iter().map(TrialResult::deflection_rmse)),
            mean_velocity: mean(results.iter().map(|r| r.mean_of(|x| x.velocity))),
        })
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.controller.label(),
            self.phantom.label(),
            self.trials,
            self.successes,
            fmt_num(self.success_rate),
            fmt_num(self.mean_peak_deflection),
            fmt_num(self.mean_deflection),
            fmt_num(self.mean_width),
            opt(self.d_deflection),
            opt(self.d_width),
            fmt_num(self.mean_deflection_rmse),
            fmt_num(self.mean_velocity),
        )
    }
}

pub fn trial_row(r: &TrialResult) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        r.label,
        r.controller.label(),
        r.phantom_kind.label(),
        r.seed,
        r.success,
        r.failure_cause.map_or("none", |c| c.label()),
        opt(r.failure_position),
        fmt_num(r.peak_deflection()),
        fmt_num(r.mean_of(|x| x.true_deflection)),
        fmt_num(r.mean_of(|x| x.width)),
        opt(trial_rejection(r, |x| x.true_deflection)),
        opt(trial_rejection(r, |x| x.width)),
        fmt_num(r.deflection_rmse()),
        r.optimizer_calls,
    )
}

#[derive(Debug, Clone)]
pub struct MatrixResult {
    pub cells: Vec<CellSummary>,
    pub trials: Vec<TrialResult>,
}

impl MatrixResult {
    pub fn summary_csv(&self) -> String {
        let mut s = String::from(SUMMARY_HEADER);
        s.push('\n');
        for c in &self.cells {
            let _ = writeln!(s, "{}", c.csv_row());
        }
        s
    }

    pub fn trials_csv(&self) -> String {
        let mut s = String::from(TRIALS_HEADER);
        s.push('\n');
        for r in &self.trials {
            let _ = writeln!(s, "{}", trial_row(r));
        }
        s
    }

    pub fn cell(&self, controller: &ControllerSpec, phantom: PhantomKind) -> Option<&CellSummary> {
        self.cells.iter().find(|c| &c.controller == controller && c.phantom == phantom)
    }

    pub fn results_for(&self, controller: &ControllerSpec, phantom: PhantomKind) -> Vec<&TrialResult> {
        self.trials.iter().filter(|r| &r.controller == controller && r.phantom_kind == phantom).collect()
    }

    /// Writes `summary.csv`, `trials.csv` and one trace per trial.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let traces = dir.join(TRACE_DIR);
        std::fs::create_dir_all(&traces)?;
        std::fs::write(dir.join(SUMMARY_FILE), self.summary_csv())?;
        std::fs::write(dir.join(TRIALS_FILE), self.trials_csv())?;
        for r in &self.trials {
            std::fs::write(traces.join(format!("{}.csv", r.label)), trace_csv(r))?;
        }
        Ok(())
    }
}

/// Runs every cell of `suite` in order (controllers outermost, then
/// phantoms, then repetitions). Failed trials are data, not errors.
pub fn run_matrix(suite: &SuiteFile, cal: &Calibration) -> Result<MatrixResult> {
    let mut cells = Vec::new();
    let mut trials = Vec::new();
    for controller in &suite.controllers {
        for &phantom in &suite.phantoms {
            let mut cell = Vec::with_capacity(suite.repetitions as usize);
            for rep in 0..suite.repetitions {
                let mut cfg = TrialConfig::new(cal, *controller, phantom, suite.base_seed + rep as u64)?;
                if let Some(len) = suite.cut_length {
                    cfg.cut_length = len;
                    cfg.validate()?;
                }
                cell.push(run_trial(&cfg)?);
            }
            cells.push(CellSummary::from_results(*controller, phantom, &cell)?);
            trials.extend(cell);
        }
    }
    Ok(MatrixResult { cells, trials })
}
