#ifndef ROBUST_REGRESS_H
#define ROBUST_REGRESS_H

/* Generated by cbindgen from crates/ffi/src. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RrStatus {
  RR_STATUS_OK = 0,
  RR_STATUS_INVALID_ARGUMENT = 1,
  RR_STATUS_SHAPE_MISMATCH = 2,
  RR_STATUS_MISSING_TRUTH = 3,
  RR_STATUS_ESTIMATION_FAILURE = 4,
  RR_STATUS_SINGULAR_MATRIX = 5,
  RR_STATUS_NOT_POSITIVE_DEFINITE = 6,
  RR_STATUS_PRECONDITION = 7,
  RR_STATUS_PARSE = 8,
  RR_STATUS_IO = 9,
  RR_STATUS_NULL_POINTER = 10,
  RR_STATUS_PANIC = 11,
} RrStatus;

typedef enum RrMedianKind {
  RR_MEDIAN_KIND_ITERATION = 0,
  RR_MEDIAN_KIND_BOOTSTRAP = 1,
  RR_MEDIAN_KIND_SPARSE_BOOTSTRAP = 2,
  RR_MEDIAN_KIND_NONSPHERICAL = 3,
} RrMedianKind;

/**
 * Opaque regression instance owned by the caller until [`rr_instance_free`].
 */
typedef struct RrInstance RrInstance;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies a row-major `n x d` design and `n` responses into a new instance.
 *
 * # Safety
 * `x` must point to `n * d` doubles, `y` to `n` doubles and `out` to writable storage.
 */
enum RrStatus rr_instance_new(const double *x,
                              const double *y,
                              size_t n,
                              size_t d,
                              struct RrInstance **out);

/**
 * Gaussian design with oblivious noise and a planted `beta_star` of norm `beta_norm`.
 *
 * `noise` is a NUL-terminated `spike:MAG`, `gauss:SIGMA` or `pareto:SHAPE`.
 *
 * # Safety
 * `noise` must be a valid C string and `out` writable.
 */
enum RrStatus rr_instance_generate(size_t n,
                                   size_t d,
                                   double alpha,
                                   const char *noise,
                                   double beta_norm,
                                   uint64_t seed,
                                   struct RrInstance **out);

/**
 * Releases an instance; null is ignored.
 *
 * # Safety
 * `inst` must come from this library and not be used afterwards.
 */
void rr_instance_free(struct RrInstance *inst);

/**
 * # Safety
 * Pointers must be valid.
 */
enum RrStatus rr_instance_dims(const struct RrInstance *inst, size_t *n, size_t *d);

/**
 * Copies the planted `beta_star` (generated instances only).
 *
 * # Safety
 * `beta_out` must hold `len` doubles.
 */
enum RrStatus rr_instance_beta_star(const struct RrInstance *inst, double *beta_out, size_t len);

/**
 * Huber fit with transition `h` (scale 2). `iterations` and `converged` may be null.
 *
 * # Safety
 * `beta_out` must hold `len == d` doubles.
 */
enum RrStatus rr_fit_huber(const struct RrInstance *inst,
                           double h,
                           double *beta_out,
                           size_t len,
                           size_t *iterations,
                           bool *converged);

/**
 * Median estimators selected by an [`RrMedianKind`] value. `k` is used by the sparse
 * variant, `delta` by the bootstrapped ones.
 *
 * # Safety
 * `beta_out` must hold `len == d` doubles.
 */
enum RrStatus rr_fit_median(const struct RrInstance *inst,
                            uint32_t kind,
                            size_t k,
                            double delta,
                            uint64_t seed,
                            double *beta_out,
                            size_t len);

/**
 * `||beta - beta_star||^2` and `(1/n) ||X (beta - beta_star)||^2`.
 *
 * # Safety
 * `beta` must hold `len` doubles; outputs must be writable.
 */
enum RrStatus rr_error_metrics(const struct RrInstance *inst,
                               const double *beta,
                               size_t len,
                               double *err_param,
                               double *err_pred);

/**
 * Lower median of `values`, which are reordered in place.
 *
 * # Safety
 * `values` must hold `len` doubles.
 */
enum RrStatus rr_select_median(double *values, size_t len, double *out);

/**
 * Message for the last failing call on this thread; empty after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *rr_last_error_message(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ROBUST_REGRESS_H */
