#ifndef THERMOCUT_H
#define THERMOCUT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TcStatus {
  TC_STATUS_OK = 0,
  TC_STATUS_NULL_POINTER = 1,
  TC_STATUS_INVALID_ARGUMENT = 2,
  TC_STATUS_CONFIG = 3,
  TC_STATUS_IO = 4,
  TC_STATUS_SINGULARITY = 5,
  TC_STATUS_NUMERICAL = 6,
  TC_STATUS_OUT_OF_RANGE = 7,
  TC_STATUS_PANIC = 8,
} TcStatus;

// Opaque trial configuration.
typedef struct TcTrialConfig TcTrialConfig;

// Opaque trial result.
typedef struct TcTrialResult TcTrialResult;

// Tissue and source parameters in SI units, temperatures in degC.
typedef struct TcThermalParams {
  double lambda;
  double rho;
  double c;
  double q_hat;
  double d_cut;
  double t0;
  double tc;
} TcThermalParams;

// Outcome of a finished trial. `failure_cause` is 0 for success, then
// 1 deflection, 2 filter divergence, 3 timeout.
typedef struct TcTrialSummary {
  bool success;
  uint32_t failure_cause;
  // NaN on success.
  double failure_position;
  double peak_deflection;
  double deflection_rmse;
  size_t trace_len;
  size_t optimizer_calls;
} TcTrialSummary;

// One control tick; same fields and units as the CSV trace.
typedef struct TcTraceRow {
  double t;
  double position;
  double velocity;
  double true_deflection;
  double est_deflection;
  double width;
  double predicted_width;
  double q_hat;
  double c;
  double lambda;
  double rho;
  double c_defl_hat;
  double d_max_hat;
} TcTraceRow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null if none. Valid
// until the next failing call on the same thread.
const char *tc_last_error_message(void);

// Modified Bessel function of the second kind, order zero, for `x > 0`.
//
// # Safety
// `out` must be null or valid for a write.
enum TcStatus tc_bessel_k0(double x, double *out);

// Width (m) of the `tc` isotherm behind a source moving at `u` m/s.
//
// # Safety
// `p` must be null or point to a valid struct; `out` null or writable.
enum TcStatus tc_isotherm_width(double u, const struct TcThermalParams *p, double *out);

// Temperature (degC) at `(xi, y)` metres from a source moving at `u` m/s
// along +xi.
//
// # Safety
// `p` must be null or point to a valid struct; `out` null or writable.
enum TcStatus tc_temperature_at(double xi,
                                double y,
                                double u,
                                const struct TcThermalParams *p,
                                double *out);

// Builds a trial from scenario TOML. `calibration_toml` may be null, in
// which case the scenario's own `calibration` path (relative to the
// working directory) or the shipped calibration is used.
//
// # Safety
// String arguments must be null or NUL-terminated; `out` null or writable.
enum TcStatus tc_trial_config_from_toml(const char *scenario_toml,
                                        const char *calibration_toml,
                                        struct TcTrialConfig **out);

// # Safety
// `cfg` must be null or a handle from [`tc_trial_config_from_toml`] not
// yet freed.
void tc_trial_config_free(struct TcTrialConfig *cfg);

// Overrides the seed of a configured trial.
//
// # Safety
// `cfg` must be null or a live handle.
enum TcStatus tc_trial_config_set_seed(struct TcTrialConfig *cfg, uint64_t seed);

// Runs the trial to completion. A failed cut is a successful call; see
// [`TcTrialSummary`].
//
// # Safety
// `cfg` must be null or a live handle; `out` null or writable.
enum TcStatus tc_run_trial(const struct TcTrialConfig *cfg, struct TcTrialResult **out);

// # Safety
// `r` must be null or a live handle; `out` null or writable.
enum TcStatus tc_trial_result_summary(const struct TcTrialResult *r, struct TcTrialSummary *out);

// Row `index` of the trace.
//
// # Safety
// `r` must be null or a live handle; `out` null or writable.
enum TcStatus tc_trial_result_trace_row(const struct TcTrialResult *r,
                                        size_t index,
                                        struct TcTraceRow *out);

// # Safety
// `r` must be null or a handle from [`tc_run_trial`] not yet freed.
void tc_trial_result_free(struct TcTrialResult *r);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* THERMOCUT_H */
