#ifndef PHOTOCOOL_H
#define PHOTOCOOL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum PcStatus {
  PC_STATUS_OK = 0,
  /**
   * Bad argument values, grids, names or strings.
   */
  PC_STATUS_INVALID_INPUT = 1,
  /**
   * The model is undefined at the requested point.
   */
  PC_STATUS_PHYSICS = 2,
  /**
   * The master-equation solver failed.
   */
  PC_STATUS_ORACLE = 3,
  /**
   * A required pointer argument was null.
   */
  PC_STATUS_NULL_POINTER = 4,
  /**
   * The library panicked; this is a bug.
   */
  PC_STATUS_PANIC = 5,
} PcStatus;

/**
 * Validated model parameters.
 */
typedef struct PcParams PcParams;

/**
 * Result of running a sweep preset: one table per curve.
 */
typedef struct PcSweep PcSweep;

/**
 * Closed-form steady state at one parameter point.
 */
typedef struct PcSteady {
  /**
   * Steady phonon number; NaN when `heating` is set.
   */
  double n_s;
  bool heating;
  double r11;
  double r22;
  /**
   * Dressed inversion.
   */
  double rz;
  /**
   * Bare inversion.
   */
  double sz;
  double cooling_rate;
  double a_rate_minus;
  double a_rate_plus;
  double gamma_perp;
  double gamma_s;
  /**
   * Every validity check holds at the default margin.
   */
  bool valid;
} PcSteady;

/**
 * Master-equation steady state at a fixed truncation.
 */
typedef struct PcOracleSteady {
  double n;
  double r11;
  double r22;
  double rz;
  /**
   * Population of the two highest Fock levels.
   */
  double tail_mass;
  double trace_error;
  double hermiticity_error;
  double min_eigenvalue;
  double residual;
} PcOracleSteady;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next library call on the same thread.
 */
const char *pc_last_error(void);

/**
 * Library version as a static string.
 */
const char *pc_version(void);

/**
 * Validate and store a parameter point. Rates are in any common unit.
 *
 * # Safety
 * `out` must be null or point to writable storage for one pointer.
 */
enum PcStatus pc_params_new(double omega,
                            double delta,
                            double nu,
                            double eta,
                            double gamma_plus,
                            double gamma_minus,
                            double gamma_zero,
                            struct PcParams **out);

/**
 * # Safety
 * `p` must be null or a handle from [`pc_params_new`] not yet freed.
 */
void pc_params_free(struct PcParams *p);

/**
 * Closed-form steady state.
 *
 * # Safety
 * `p` must be a live handle and `out` writable.
 */
enum PcStatus pc_steady(const struct PcParams *p, struct PcSteady *out);

/**
 * Validity report as a JSON string; free it with [`pc_string_free`].
 *
 * # Safety
 * `p` must be a live handle and `out` writable.
 */
enum PcStatus pc_validity_json(const struct PcParams *p, double margin, char **out);

/**
 * Closed-form phonon number at each of `len` times, starting from `n0`.
 * With `integrate` set the rate equation is integrated numerically instead.
 *
 * # Safety
 * `times` and `out` must each hold `len` doubles.
 */
enum PcStatus pc_phonon_trajectory(const struct PcParams *p,
                                   double n0,
                                   const double *times,
                                   size_t len,
                                   bool integrate,
                                   double *out);

/**
 * Master-equation steady state with `n_max` phonon levels.
 *
 * # Safety
 * `p` must be a live handle and `out` writable.
 */
enum PcStatus pc_oracle_steady(const struct PcParams *p, size_t n_max, struct PcOracleSteady *out);

/**
 * Run a named preset (`fig1`, `fig1e`, `fig2`, `fig3`).
 *
 * # Safety
 * `name` must be a nul-terminated string and `out` writable.
 */
enum PcStatus pc_sweep_preset(const char *name, struct PcSweep **out);

/**
 * # Safety
 * `s` must be null or a handle from [`pc_sweep_preset`] not yet freed.
 */
void pc_sweep_free(struct PcSweep *s);

/**
 * Number of curves; 0 for a null handle.
 *
 * # Safety
 * `s` must be null or a live handle.
 */
size_t pc_sweep_curve_count(const struct PcSweep *s);

/**
 * Number of rows in `curve`; 0 for a null handle or out-of-range curve.
 *
 * # Safety
 * `s` must be null or a live handle.
 */
size_t pc_sweep_row_count(const struct PcSweep *s, size_t curve);

/**
 * Copy the grid values and steady phonon numbers of `curve` into `x` and
 * `n_s` (each at least [`pc_sweep_row_count`] long). Heating and error
 * rows get NaN in `n_s`.
 *
 * # Safety
 * `s` must be a live handle; `x` and `n_s` must hold enough doubles.
 */
enum PcStatus pc_sweep_curve(const struct PcSweep *s, size_t curve, double *x, double *n_s);

/**
 * Whole sweep as JSON, one object per curve with label and rows.
 *
 * # Safety
 * `s` must be a live handle and `out` writable.
 */
enum PcStatus pc_sweep_json(const struct PcSweep *s, char **out);

/**
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void pc_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PHOTOCOOL_H */
