#ifndef CHEMOSPREAD_H
#define CHEMOSPREAD_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  CS_STATUS_OK = 0,
  CS_STATUS_NULL_POINTER = 1,
  CS_STATUS_INVALID_ARGUMENT = 2,
  CS_STATUS_CONFIG = 3,
  CS_STATUS_NUMERICAL = 4,
  CS_STATUS_IO = 5,
  CS_STATUS_BUFFER_TOO_SMALL = 6,
  CS_STATUS_NO_FRONT = 7,
  CS_STATUS_PANIC = 8,
} CsStatus;

/**
 * A running simulation.
 */
typedef struct CsSimulation CsSimulation;

/**
 * Closed-form constants for one `(a, dim, eps)`.
 */
typedef struct {
  double a;
  size_t dim;
  double eps;
  double abar;
  double ell;
  double lambda_floor;
  double kpp_speed;
  double max_frame_speed;
  double eigenvalue_at_rest;
  /**
   * Smallest eigenvalue over 101 evenly spaced admissible speeds.
   */
  double eigenvalue_min;
  double eigenvalue_min_speed;
} CsTheory;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, empty if none failed.
 * Successful calls leave it unchanged.
 *
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *cs_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *cs_version(void);

/**
 * Spreading speed `2 sqrt(a)`; NaN for a non-positive `a`.
 */
double cs_kpp_speed(double a);

/**
 * Speed `(k^2 + a) / k` of the exponential envelope.
 *
 * # Safety
 * `out` must be null or point to a writable `double`.
 */
CsStatus cs_envelope_speed(double k, double a, double *out);

/**
 * Whether `b > N mu chi / 4`.
 *
 * # Safety
 * `out` must be null or point to a writable `bool`.
 */
CsStatus cs_damping_condition(double chi,
                              double a,
                              double b,
                              double lambda,
                              double mu,
                              size_t dim,
                              bool *out);

/**
 * Fills `out` with the constants for growth rate `a`, dimension `dim` and
 * speed margin `eps`.
 *
 * # Safety
 * `out` must be null or point to a writable `CsTheory`.
 */
CsStatus cs_theory_evaluate(double a, size_t dim, double eps, CsTheory *out);

/**
 * Runs a configuration file and writes its artifacts to `out_dir`.
 *
 * Returns `CS_STATUS_NUMERICAL` when the integration stopped early.
 *
 * # Safety
 * Both arguments must be null or NUL-terminated strings.
 */
CsStatus cs_run_config_file(const char *config_path, const char *out_dir);

/**
 * Builds a simulation from a JSON run configuration.
 *
 * # Safety
 * `config_json` must be null or a NUL-terminated string; `out` must be null
 * or point to a writable pointer. On success `*out` owns a handle that must
 * be released with `cs_simulation_free`.
 */
CsStatus cs_simulation_from_config(const char *config_json, CsSimulation **out);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `sim` must be null or a handle from `cs_simulation_from_config` that has
 * not been freed.
 */
void cs_simulation_free(CsSimulation *sim);

/**
 * Takes one step of the configured size. On a numerical failure the state
 * is left unchanged.
 *
 * # Safety
 * `sim` must be null or a live handle; `dt_taken` may be null.
 */
CsStatus cs_simulation_step(CsSimulation *sim, double *dt_taken);

/**
 * Steps until time `t_end`, landing on it exactly. The state is left at the
 * last successful step if one fails.
 *
 * # Safety
 * `sim` must be null or a live handle.
 */
CsStatus cs_simulation_advance(CsSimulation *sim, double t_end);

/**
 * # Safety
 * `sim` must be null or a live handle; `out` must be null or writable.
 */
CsStatus cs_simulation_time(const CsSimulation *sim, double *out);

/**
 * Number of grid points, the length each field buffer must have.
 *
 * # Safety
 * `sim` must be null or a live handle; `out` must be null or writable.
 */
CsStatus cs_simulation_len(const CsSimulation *sim, size_t *out);

/**
 * Copies the density, row-major, into `buf`.
 *
 * # Safety
 * `sim` must be null or a live handle; `buf` must be null or hold `len`
 * writable doubles.
 */
CsStatus cs_simulation_copy_u(const CsSimulation *sim, double *buf, size_t len);

/**
 * Copies the chemical concentration, row-major, into `buf`.
 *
 * # Safety
 * As for `cs_simulation_copy_u`.
 */
CsStatus cs_simulation_copy_v(const CsSimulation *sim, double *buf, size_t len);

/**
 * Front position of the density at `threshold`.
 *
 * `direction` points to `dim` components of a unit vector; null selects the
 * radial front.
 *
 * # Safety
 * `sim` must be null or a live handle; `direction` must be null or hold
 * `dim` readable doubles; `out` must be null or writable.
 */
CsStatus cs_simulation_front_position(const CsSimulation *sim,
                                      double threshold,
                                      const double *direction,
                                      size_t dim,
                                      double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CHEMOSPREAD_H */
