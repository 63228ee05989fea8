#ifndef PSNF_H
#define PSNF_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Result of every fallible call.
 */
typedef enum PsnfStatus {
  PSNF_STATUS_OK = 0,
  PSNF_STATUS_NULL_POINTER = 1,
  PSNF_STATUS_INVALID_PARAMETER = 2,
  PSNF_STATUS_NUMERICAL = 3,
  PSNF_STATUS_INFEASIBLE_TARGET = 4,
  PSNF_STATUS_BUFFER_TOO_SMALL = 5,
  PSNF_STATUS_INTERNAL = 6,
} PsnfStatus;

typedef enum PsnfControllerKind {
  PSNF_CONTROLLER_KIND_OPEN_LOOP = 0,
  PSNF_CONTROLLER_KIND_PI = 1,
  PSNF_CONTROLLER_KIND_MPC = 2,
} PsnfControllerKind;

/**
 * Plant parameters (opaque).
 */
typedef struct PsnfParams PsnfParams;

/**
 * A finished closed-loop run (opaque).
 */
typedef struct PsnfRun PsnfRun;

/**
 * Closed-loop run settings. NaN in `open_loop_duty` selects the feedforward
 * duty; NaN in `init_b` or `init_t` selects the default initial state.
 */
typedef struct PsnfRunOptions {
  enum PsnfControllerKind controller;
  double period;
  double gamma;
  double b_ref;
  size_t n_periods;
  double step;
  uint64_t seed;
  double kp;
  double ki;
  double quantization_step;
  bool anti_windup;
  size_t horizon;
  double open_loop_duty;
  double init_b;
  double init_t;
} PsnfRunOptions;

typedef struct PsnfMetrics {
  double e_r_percent;
  /**
   * -1 when the run never settled.
   */
  int32_t settling_periods;
  double d_max;
  double ise;
  double itae;
  double d_ref;
} PsnfMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Static description of a status code.
 */
const char *psnf_status_message(enum PsnfStatus status);

/**
 * Message of the last failure on this thread, or NULL. Valid until the next
 * failing call on the same thread.
 */
const char *psnf_last_error(void);

const char *psnf_version(void);

/**
 * Nominal parameters. Release with [`psnf_params_free`].
 */
struct PsnfParams *psnf_params_nominal(void);

/**
 * Validated parameters written to `*out`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum PsnfStatus psnf_params_new(double g,
                                double b_max,
                                double d,
                                double s,
                                double c,
                                double k,
                                struct PsnfParams **out);

/**
 * # Safety
 * `params` must come from this library and not have been freed; NULL is a no-op.
 */
void psnf_params_free(struct PsnfParams *params);

/**
 * Coexistence equilibrium `(B*, T*)` in kg/cm^2.
 *
 * # Safety
 * `params` must be a live handle; `b` and `t` must be valid for writes.
 */
enum PsnfStatus psnf_equilibrium(const struct PsnfParams *params, double *b, double *t);

/**
 * Feedforward duty-cycle placing the averaged biomass on `b_ref` (kg/cm^2).
 *
 * # Safety
 * `params` must be a live handle; `duty` must be valid for writes.
 */
enum PsnfStatus psnf_feedforward_duty(const struct PsnfParams *params,
                                      double gamma,
                                      double b_ref,
                                      double *duty);

/**
 * Default options: PI control with the library defaults.
 */
struct PsnfRunOptions psnf_run_options_default(void);

/**
 * Runs a closed-loop simulation and writes a run handle to `*out`.
 *
 * # Safety
 * `params` must be a live handle, `options` readable and `out` writable.
 */
enum PsnfStatus psnf_simulate(const struct PsnfParams *params,
                              const struct PsnfRunOptions *options,
                              struct PsnfRun **out);

/**
 * # Safety
 * `run` must come from [`psnf_simulate`] and not have been freed; NULL is a no-op.
 */
void psnf_run_free(struct PsnfRun *run);

/**
 * # Safety
 * `run` must be a live handle and `out` writable.
 */
enum PsnfStatus psnf_run_metrics(const struct PsnfRun *run, struct PsnfMetrics *out);

/**
 * Number of trajectory samples; 0 for NULL.
 *
 * # Safety
 * `run` must be a live handle or NULL.
 */
size_t psnf_run_sample_count(const struct PsnfRun *run);

/**
 * Copies the trajectory into caller buffers of length `len`. Any of the
 * buffers may be NULL to skip that column.
 *
 * # Safety
 * `run` must be a live handle; non-NULL buffers must hold `len` doubles.
 */
enum PsnfStatus psnf_run_samples(const struct PsnfRun *run,
                                 double *time,
                                 double *biomass,
                                 double *toxin,
                                 double *input,
                                 size_t len);

/**
 * Number of control periods; 0 for NULL.
 *
 * # Safety
 * `run` must be a live handle or NULL.
 */
size_t psnf_run_period_count(const struct PsnfRun *run);

/**
 * Copies applied duties and per-period errors; either buffer may be NULL.
 *
 * # Safety
 * `run` must be a live handle; non-NULL buffers must hold `len` doubles.
 */
enum PsnfStatus psnf_run_duties(const struct PsnfRun *run, double *duty, double *error, size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PSNF_H */
