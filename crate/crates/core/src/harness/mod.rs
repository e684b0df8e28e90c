//! Trial runner and metrics: steps the simulated phantom, camera, filters
//! and controller together and summarises the outcome.

mod benchmark;
mod config;
mod matrix;
mod metrics;
mod report;
mod trial;

pub use benchmark::{deflection_benchmark, BenchmarkResult, SWEEP};
pub use config::{
    Calibration, ControllerSpec, PhantomKind, ScenarioFile, SlackForm, SuiteFile, DEFAULT_CALIBRATION,
};
pub use matrix::{
    fmt_num, run_matrix, trace_csv, trial_row, CellSummary, MatrixResult, SUMMARY_FILE, SUMMARY_HEADER, TRACE_DIR,
    TRIALS_FILE, TRIALS_HEADER,
};
pub use metrics::{disturbance_rejection, success_rate, trial_rejection, WINDOW_LENGTH};
pub use report::{report, Report, PLOT_DIR};
pub use trial::{run_trial, FailureCause, TraceRow, TrialConfig, TrialResult};
