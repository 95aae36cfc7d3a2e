#ifndef DEBT_CEILING_H
#define DEBT_CEILING_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum DcStatus {
  DC_STATUS_OK = 0,
  DC_STATUS_NULL_POINTER = 1,
  DC_STATUS_INVALID_INPUT = 2,
  /**
   * The discount rate fails one of its lower bounds.
   */
  DC_STATUS_VALIDATION = 3,
  DC_STATUS_UNSUPPORTED = 4,
  DC_STATUS_NUMERICAL = 5,
  DC_STATUS_NON_CONVERGENCE = 6,
  DC_STATUS_CONFIG = 7,
  DC_STATUS_CACHE = 8,
  DC_STATUS_IO = 9,
  /**
   * A Rust panic was caught at the boundary.
   */
  DC_STATUS_PANIC = 10,
} DcStatus;

typedef enum DcPolicy {
  DC_POLICY_OPTIMAL = 0,
  DC_POLICY_DO_NOTHING = 1,
  DC_POLICY_IMMEDIATE_TO_ZERO = 2,
  /**
   * Uses the `level` argument.
   */
  DC_POLICY_CONSTANT = 3,
} DcPolicy;

/**
 * A solved boundary.
 */
typedef struct DcBoundary DcBoundary;

/**
 * Model, cost and solver settings.
 */
typedef struct DcModel DcModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Creates a model with default solver settings.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum DcStatus dc_model_new(double delta,
                           double g,
                           double a,
                           double theta,
                           double sigma,
                           double rho,
                           double kappa,
                           double cost_c,
                           double cost_gamma,
                           double cost_m,
                           struct DcModel **out);

/**
 * Reads a `key = value` config file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum DcStatus dc_model_from_config(const char *path, struct DcModel **out);

/**
 * # Safety
 * `model` must come from this library and not be used afterwards.
 */
void dc_model_free(struct DcModel *model);

/**
 * Overrides the grid sizes of the solver.
 *
 * # Safety
 * `model` must be a live handle.
 */
enum DcStatus dc_model_set_grid(struct DcModel *model, size_t n_z, size_t n_t);

/**
 * Checks the discount-rate condition. Returns `Validation` with the
 * violated bounds in the error message when it fails; `required` receives
 * the largest bound either way.
 *
 * # Safety
 * `model` must be a live handle; `required` may be null.
 */
enum DcStatus dc_model_validate(const struct DcModel *model, double *required);

/**
 * Solves the free boundary.
 *
 * # Safety
 * `model` must be a live handle and `out` a valid pointer.
 */
enum DcStatus dc_boundary_solve(const struct DcModel *model, struct DcBoundary **out);

/**
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum DcStatus dc_boundary_load(const char *path, struct DcBoundary **out);

/**
 * # Safety
 * `boundary` must be a live handle and `path` a NUL-terminated string.
 */
enum DcStatus dc_boundary_save(const struct DcBoundary *boundary, const char *path);

/**
 * # Safety
 * `boundary` must come from this library and not be used afterwards.
 */
void dc_boundary_free(struct DcBoundary *boundary);

/**
 * Number of grid nodes.
 *
 * # Safety
 * `boundary` must be a live handle.
 */
enum DcStatus dc_boundary_len(const struct DcBoundary *boundary, size_t *len);

/**
 * Copies the first `len` nodes into `z` and `yhat`.
 *
 * # Safety
 * `z` and `yhat` must each hold `len` doubles.
 */
enum DcStatus dc_boundary_nodes(const struct DcBoundary *boundary,
                                double *z,
                                double *yhat,
                                size_t len);

/**
 * `y*` (negative infinity when it does not exist) and the largest relative
 * certificate residual.
 *
 * # Safety
 * `boundary` must be a live handle; out-pointers must be valid.
 */
enum DcStatus dc_boundary_summary(const struct DcBoundary *boundary,
                                  double *y_star,
                                  double *residual_max,
                                  size_t *iterations);

/**
 * `ŷ(z)`.
 *
 * # Safety
 * `boundary` must be a live handle and `out` valid.
 */
enum DcStatus dc_boundary_yhat(const struct DcBoundary *boundary, double z, double *out);

/**
 * Debt ceiling `b(y)`.
 *
 * # Safety
 * `boundary` must be a live handle and `out` valid.
 */
enum DcStatus dc_boundary_ceiling(const struct DcBoundary *boundary, double y, double *out);

/**
 * Stopping value `u(z, y)`.
 *
 * # Safety
 * `boundary` must be a live handle and `out` valid.
 */
enum DcStatus dc_eval_u(const struct DcBoundary *boundary, double z, double y, double *out);

/**
 * Value `v(x, y)` and the half-width of its error bracket.
 *
 * # Safety
 * `boundary` must be a live handle; `error_bracket` may be null.
 */
enum DcStatus dc_eval_v(const struct DcBoundary *boundary,
                        double x,
                        double y,
                        double *out,
                        double *error_bracket);

/**
 * Monte Carlo cost of one policy. `boundary` is only read for
 * `DcPolicy::Optimal` and may be null otherwise; `level` is only read for
 * `DcPolicy::Constant`.
 *
 * # Safety
 * Handles must be live; out-pointers valid.
 */
enum DcStatus dc_estimate_cost(const struct DcModel *model,
                               const struct DcBoundary *boundary,
                               enum DcPolicy policy,
                               double level,
                               double x0,
                               double y0,
                               size_t n_paths,
                               double horizon,
                               double dt,
                               uint64_t seed,
                               double *mean,
                               double *stderr);

/**
 * Copies the last error message of this thread, NUL-terminated and
 * truncated to `len` bytes. Returns the full message length without the
 * terminator.
 *
 * # Safety
 * `buf` must hold `len` bytes or be null.
 */
size_t dc_last_error_message(char *buf, size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DEBT_CEILING_H */
