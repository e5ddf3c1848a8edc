#ifndef CALIBKIT_H
#define CALIBKIT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CkStatus {
  CK_STATUS_OK = 0,
  CK_STATUS_NULL_POINTER = 1,
  CK_STATUS_INVALID_ARGUMENT = 2,
  CK_STATUS_DOMAIN_ERROR = 3,
  CK_STATUS_NOT_CALIBRATED = 4,
  CK_STATUS_UNBOUNDED = 5,
  CK_STATUS_IO = 6,
  CK_STATUS_INTERNAL = 7,
} CkStatus;

/**
 * A calibration curve on an increasing ε grid.
 */
typedef struct CkCurve CkCurve;

/**
 * A validated loss specification.
 */
typedef struct CkLoss CkLoss;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last non-OK status on this thread; empty if none. Valid
 * until the next call into this library from the same thread.
 */
const char *ck_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ck_version(void);

/**
 * Parses a flat JSON loss specification into a new handle.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` writable.
 */
enum CkStatus ck_loss_from_json(const char *json, struct CkLoss **out);

/**
 * # Safety
 * `loss` must come from [`ck_loss_from_json`] and not be freed twice. Null is ignored.
 */
void ck_loss_free(struct CkLoss *loss);

/**
 * Number of classes of the loss.
 *
 * # Safety
 * `loss` must be a live handle and `out` writable.
 */
enum CkStatus ck_loss_classes(const struct CkLoss *loss, uintptr_t *out);

/**
 * L(s, y) for scores `s` of length `k`, which must match the loss.
 *
 * # Safety
 * `scores` must point to `k` doubles and `out` be writable.
 */
enum CkStatus ck_loss_eval(const struct CkLoss *loss,
                           const double *scores,
                           uintptr_t k,
                           uintptr_t y,
                           double *out);

/**
 * Σ_y p_y L(s, y).
 *
 * # Safety
 * `scores` and `p` must point to `k` doubles each and `out` be writable.
 */
enum CkStatus ck_pointwise_risk(const struct CkLoss *loss,
                                const double *scores,
                                const double *p,
                                uintptr_t k,
                                double *out);

/**
 * Closed-form binary calibration function of a transformation. `tau`, `a`
 * and `b` are the kink location, exponent/slope and offset; NaN keeps the
 * default.
 *
 * # Safety
 * `phi_kind` must be a NUL-terminated string and `out` writable.
 */
enum CkStatus ck_delta_binary_closed(const char *phi_kind,
                                     double tau,
                                     double a,
                                     double b,
                                     double eps,
                                     double *out);

/**
 * Numeric binary calibration function; `out_residual` may be null.
 *
 * # Safety
 * As [`ck_delta_binary_closed`]; `out_residual` is writable or null.
 */
enum CkStatus ck_delta_binary_numeric(const char *phi_kind,
                                      double tau,
                                      double a,
                                      double b,
                                      double eps,
                                      double *out,
                                      double *out_residual);

/**
 * δ_max(ε, p) at one distribution `p` of length `k`. +∞ when no class is
 * ε-suboptimal at `p`.
 *
 * # Safety
 * `p` must point to `k` doubles and `out` be writable.
 */
enum CkStatus ck_delta_max_pointwise(const struct CkLoss *loss,
                                     double eps,
                                     const double *p,
                                     uintptr_t k,
                                     double *out);

/**
 * δ_max(ε) over a simplex grid of the given resolution (K ≤ 4).
 *
 * # Safety
 * `loss` must be a live handle and `out` writable.
 */
enum CkStatus ck_delta_max_global(const struct CkLoss *loss,
                                  double eps,
                                  uintptr_t resolution,
                                  double *out);

/**
 * Reads a curve CSV with at least `eps` and `delta` columns.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` writable.
 */
enum CkStatus ck_curve_from_csv(const char *path, struct CkCurve **out);

/**
 * Builds a curve from `n` (ε, δ) pairs with increasing ε.
 *
 * # Safety
 * `eps` and `delta` must point to `n` doubles each and `out` be writable.
 */
enum CkStatus ck_curve_from_points(const double *eps,
                                   const double *delta,
                                   uintptr_t n,
                                   struct CkCurve **out);

/**
 * # Safety
 * `curve` must come from a `ck_curve_from_*` call and not be freed twice. Null is ignored.
 */
void ck_curve_free(struct CkCurve *curve);

/**
 * inf{ε : δ(ε) ≥ x}. `out_beyond` (may be null) is set when no grid point
 * reaches x; `out_eps` is then the largest grid ε.
 *
 * # Safety
 * `curve` must be a live handle; `out_eps` writable; `out_beyond` writable or null.
 */
enum CkStatus ck_generalized_inverse(const struct CkCurve *curve,
                                     double x,
                                     double *out_eps,
                                     bool *out_beyond);

/**
 * 0-1 excess bound under a noise condition with constants `c` and `alpha`.
 *
 * # Safety
 * As [`ck_generalized_inverse`].
 */
enum CkStatus ck_convert_mtnc(const struct CkCurve *curve,
                              double surrogate_excess,
                              double c,
                              double alpha,
                              double *out_eps,
                              bool *out_beyond);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CALIBKIT_H */
