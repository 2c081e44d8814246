#ifndef DIPOLEJET_H
#define DIPOLEJET_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes of every `dj_*` call.
 */
typedef enum DjStatus {
  DJ_STATUS_OK = 0,
  DJ_STATUS_NULL_POINTER = 1,
  DJ_STATUS_INVALID_UTF8 = 2,
  DJ_STATUS_INVALID_CONFIG = 3,
  DJ_STATUS_INVALID_INPUT = 4,
  DJ_STATUS_ILL_CONDITIONED = 5,
  DJ_STATUS_COMPUTATION_FAILED = 6,
  DJ_STATUS_PANIC = 7,
} DjStatus;

/**
 * Configured experiment: domain, hidden potential and solver settings.
 */
typedef struct DjExperiment DjExperiment;

typedef struct DjMeasurement {
  double tau_plus;
  double exit_point[2];
  /**
   * 1 when `a-` is outside the domain at the exit time.
   */
  int32_t companion_visible;
  double companion[2];
} DjMeasurement;

typedef struct DjGradient {
  double p[2];
  double gradient[2];
  double uncertainty;
  double ell_prime;
} DjGradient;

typedef struct DjReconSummary {
  size_t points;
  size_t failures;
  double sup_err;
  double rms_err;
  double sup_rel_err;
  double path_discrepancy;
  /**
   * Order actually reached by the boundary jet.
   */
  size_t jet_order;
} DjReconSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parses a JSON experiment configuration and builds a handle.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum DjStatus dj_experiment_from_json(const char *json, struct DjExperiment **out);

/**
 * Releases a handle; null is ignored.
 *
 * # Safety
 * `exp` must come from [`dj_experiment_from_json`] and not be used afterwards.
 */
void dj_experiment_free(struct DjExperiment *exp);

/**
 * One measurement for `a+` launched at `(x1, x2)` with `a-` at `(y1, y2)`.
 *
 * # Safety
 * `exp` and `out` must be valid pointers.
 */
enum DjStatus dj_measure(const struct DjExperiment *exp,
                         double x1,
                         double x2,
                         double y1,
                         double y2,
                         struct DjMeasurement *out);

/**
 * Recovers the gradient of the hidden potential at boundary parameter `theta`.
 *
 * # Safety
 * `exp` and `out` must be valid pointers.
 */
enum DjStatus dj_recover_gradient(const struct DjExperiment *exp,
                                  double theta,
                                  struct DjGradient *out);

/**
 * Chart-coordinate jet entry `d_s^j d_n^k Q` at `theta`, recovered through `order`.
 *
 * Returns `IllConditioned` when the jet stopped below the requested entry.
 *
 * # Safety
 * `exp`, `value` and `uncertainty` must be valid pointers.
 */
enum DjStatus dj_recover_jet_entry(const struct DjExperiment *exp,
                                   double theta,
                                   size_t order,
                                   size_t j,
                                   size_t k,
                                   double *value,
                                   double *uncertainty);

/**
 * Runs the global reconstruction described by the configuration.
 *
 * # Safety
 * `exp` and `out` must be valid pointers.
 */
enum DjStatus dj_reconstruct(const struct DjExperiment *exp, struct DjReconSummary *out);

/**
 * Copies the calling thread's last error message into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length without the NUL.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t dj_last_error(char *buf, size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DIPOLEJET_H */
