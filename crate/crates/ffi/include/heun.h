#ifndef HEUN_H
#define HEUN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum HeunBranch {
  HEUN_BRANCH_FIRST = 0,
  HEUN_BRANCH_SECOND = 1,
} HeunBranch;

typedef enum HeunMethod {
  HEUN_METHOD_FROBENIUS = 0,
  HEUN_METHOD_TRF = 1,
  HEUN_METHOD_RK = 2,
} HeunMethod;

/**
 * Outcome of a call. Nonzero codes 1..=3 match the CLI exit codes.
 */
typedef enum HeunStatus {
  HEUN_STATUS_OK = 0,
  HEUN_STATUS_USAGE = 1,
  HEUN_STATUS_DOMAIN = 2,
  HEUN_STATUS_CONVERGENCE = 3,
  HEUN_STATUS_NULL_POINTER = 4,
  HEUN_STATUS_PANIC = 5,
} HeunStatus;

/**
 * Opaque validated parameter set.
 */
typedef struct HeunParamsHandle HeunParamsHandle;

/**
 * Opaque list of transformation records.
 */
typedef struct HeunTableHandle HeunTableHandle;

/**
 * A point value. Fields a method does not produce are NaN (`terms_used` 0).
 */
typedef struct HeunValue {
  double value;
  double d1;
  double d2;
  double error_estimate;
  size_t terms_used;
} HeunValue;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *heun_last_error(void);

/**
 * Validates a parameter set; `epsilon` is derived. Free with
 * [`heun_params_free`].
 *
 * # Safety
 * `out` must be valid for writing one pointer.
 */
enum HeunStatus heun_params_new(double a,
                                double q,
                                double alpha,
                                double beta,
                                double gamma,
                                double delta,
                                struct HeunParamsHandle **out);

/**
 * # Safety
 * `params` must come from [`heun_params_new`] and not be used afterwards.
 */
void heun_params_free(struct HeunParamsHandle *params);

/**
 * # Safety
 * `params` must be a live handle and `out` valid for writing.
 */
enum HeunStatus heun_params_epsilon(const struct HeunParamsHandle *params, double *out);

/**
 * Evaluates the local solution of the given branch at `x` with default
 * controls.
 *
 * # Safety
 * `params` must be a live handle and `out` valid for writing.
 */
enum HeunStatus heun_eval(const struct HeunParamsHandle *params,
                          enum HeunBranch branch,
                          enum HeunMethod method,
                          double x,
                          struct HeunValue *out);

/**
 * Writes the power-series coefficients `c_0..=c_order` of the branch into
 * `out`, which must hold `order + 1` values (`len`). `method` is
 * `Frobenius` or `Trf`.
 *
 * # Safety
 * `params` must be a live handle and `out` valid for `len` writes.
 */
enum HeunStatus heun_coeffs(const struct HeunParamsHandle *params,
                            enum HeunBranch branch,
                            enum HeunMethod method,
                            size_t order,
                            double *out,
                            size_t len);

/**
 * Residual of the equation at `x` for a candidate `(y, y', y'')`, and the
 * scale it should be judged against.
 *
 * # Safety
 * `params` must be a live handle; `residual` and `scale` valid for writing.
 */
enum HeunStatus heun_residual(const struct HeunParamsHandle *params,
                              double x,
                              double y,
                              double d1,
                              double d2,
                              double *residual,
                              double *scale);

/**
 * Loads a JSON transformation table from a file. Free with
 * [`heun_table_free`].
 *
 * # Safety
 * `path` must be a nul-terminated string and `out` valid for writing.
 */
enum HeunStatus heun_table_load(const char *path, struct HeunTableHandle **out);

/**
 * Parses a JSON transformation table from text.
 *
 * # Safety
 * `json` must be a nul-terminated string and `out` valid for writing.
 */
enum HeunStatus heun_table_parse(const char *json, struct HeunTableHandle **out);

/**
 * # Safety
 * `table` must come from this library and not be used afterwards.
 */
void heun_table_free(struct HeunTableHandle *table);

/**
 * Number of records in the table; 0 for a null handle.
 *
 * # Safety
 * `table` must be null or a live handle.
 */
size_t heun_table_len(const struct HeunTableHandle *table);

/**
 * Evaluates record `index` of the table applied to `params` at `x`:
 * `prefactor(x) · H(params'; m(x))` by the infinite-series form.
 *
 * # Safety
 * `table` and `params` must be live handles and `out` valid for writing.
 */
enum HeunStatus heun_transformed_eval(const struct HeunTableHandle *table,
                                      size_t index,
                                      const struct HeunParamsHandle *params,
                                      enum HeunBranch branch,
                                      double x,
                                      struct HeunValue *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HEUN_H */
