#ifndef QHLAB_H
#define QHLAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes shared by every entry point.
 */
typedef enum QhStatus {
  QH_STATUS_OK = 0,
  QH_STATUS_NULL_ARGUMENT = 1,
  QH_STATUS_INVALID_UTF8 = 2,
  QH_STATUS_INPUT = 3,
  QH_STATUS_FORMAT = 4,
  QH_STATUS_UNREACHABLE = 5,
  QH_STATUS_MAPPING = 6,
  QH_STATUS_UNSUPPORTED = 7,
  QH_STATUS_ARITHMETIC = 8,
  /**
   * A Rust panic was caught at the boundary.
   */
  QH_STATUS_INTERNAL = 9,
} QhStatus;

/**
 * Opaque domain handle.
 */
typedef struct QhDomain QhDomain;

/**
 * Distance estimate with certified lower bound. `kind` is 0 for the
 * quasihyperbolic metric and 1 for the inner length metric.
 */
typedef struct QhEstimate {
  double value;
  double lower_bound;
  uint32_t level;
  uint32_t kind;
} QhEstimate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parse a domain from its JSON form into `*out`.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum QhStatus qh_domain_from_json(const char *json, struct QhDomain **out);

/**
 * Release a domain handle. Null is accepted.
 *
 * # Safety
 * `dom` must come from [`qh_domain_from_json`] and not be used afterwards.
 */
void qh_domain_free(struct QhDomain *dom);

/**
 * Ambient dimension of the domain.
 *
 * # Safety
 * Pointers must be valid.
 */
enum QhStatus qh_domain_dim(const struct QhDomain *dom, size_t *out);

/**
 * Membership test for the point `x[0..n]`.
 *
 * # Safety
 * `x` must point to `n` doubles; other pointers must be valid.
 */
enum QhStatus qh_domain_contains(const struct QhDomain *dom, const double *x, size_t n, bool *out);

/**
 * Distance from `x[0..n]` to the boundary in the domain's norm.
 *
 * # Safety
 * `x` must point to `n` doubles; other pointers must be valid.
 */
enum QhStatus qh_boundary_distance(const struct QhDomain *dom,
                                   const double *x,
                                   size_t n,
                                   double *out);

/**
 * Quasihyperbolic distance estimate between `x` and `y` at `level`.
 *
 * # Safety
 * `x` and `y` must each point to `n` doubles; other pointers must be valid.
 */
enum QhStatus qh_quasihyperbolic_distance(const struct QhDomain *dom,
                                          const double *x,
                                          const double *y,
                                          size_t n,
                                          uint32_t level,
                                          struct QhEstimate *out);

/**
 * Inner length distance estimate between `x` and `y` at `level`.
 *
 * # Safety
 * `x` and `y` must each point to `n` doubles; other pointers must be valid.
 */
enum QhStatus qh_inner_length(const struct QhDomain *dom,
                              const double *x,
                              const double *y,
                              size_t n,
                              uint32_t level,
                              struct QhEstimate *out);

/**
 * Constant chain for the inputs as a JSON string in `*out`, released with
 * [`qh_string_free`].
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum QhStatus qh_constants_json(double a,
                                double c_prime,
                                double c0,
                                double m,
                                double c,
                                char **out);

/**
 * Release a string returned by this library. Null is accepted.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void qh_string_free(char *s);

/**
 * Message of the last failed call on this thread, or null. The pointer is
 * valid until the next call into the library on the same thread.
 */
const char *qh_last_error_message(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QHLAB_H */
