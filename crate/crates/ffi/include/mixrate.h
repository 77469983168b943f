#ifndef MIXRATE_H
#define MIXRATE_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MixrateStatus {
  MIXRATE_STATUS_OK = 0,
  MIXRATE_STATUS_NULL_POINTER = 1,
  MIXRATE_STATUS_INVALID_PARAMETER = 2,
  MIXRATE_STATUS_NUMERIC = 3,
  MIXRATE_STATUS_IO = 4,
  MIXRATE_STATUS_PANIC = 5,
  MIXRATE_STATUS_BUFFER_TOO_SMALL = 6,
} MixrateStatus;

typedef enum MixratePhiFamily {
  MIXRATE_PHI_FAMILY_LINEAR = 0,
  MIXRATE_PHI_FAMILY_POLYNOMIAL = 1,
  MIXRATE_PHI_FAMILY_SUBEXP_LOG = 2,
  MIXRATE_PHI_FAMILY_LOGARITHMIC = 3,
} MixratePhiFamily;

typedef enum MixrateRegime {
  MIXRATE_REGIME_R7A = 0,
  MIXRATE_REGIME_R7B = 1,
  MIXRATE_REGIME_R7C = 2,
  MIXRATE_REGIME_R7D = 3,
  MIXRATE_REGIME_R7E = 4,
  MIXRATE_REGIME_NOT_COVERED = 5,
} MixrateRegime;

typedef enum MixrateNoise {
  MIXRATE_NOISE_GAUSSIAN = 0,
  // `shape` is `kappa`.
  MIXRATE_NOISE_WEIBULL_TAIL = 1,
  // `shape` is `s0`; the tail index takes its default.
  MIXRATE_NOISE_STUDENT_LIKE = 2,
} MixrateNoise;

typedef enum MixrateFitClass {
  MIXRATE_FIT_CLASS_GEOMETRIC = 0,
  MIXRATE_FIT_CLASS_SUBEXPONENTIAL = 1,
  MIXRATE_FIT_CLASS_POLYNOMIAL = 2,
  MIXRATE_FIT_CLASS_LOGARITHMIC = 3,
  MIXRATE_FIT_CLASS_INCONCLUSIVE = 4,
} MixrateFitClass;

// Opaque finite chain.
typedef struct MixrateChain MixrateChain;

// Opaque drift-rate function.
typedef struct MixratePhi MixratePhi;

// Opaque mixing series.
typedef struct MixrateSeries MixrateSeries;

// Flattened fit result. `constant` is `c` for the subexponential class
// and NaN otherwise; `exponent` is `d`, `gamma`, `beta` or `alpha`.
typedef struct MixrateFit {
  enum MixrateFitClass fit_class;
  double exponent;
  double exponent_ci_low;
  double exponent_ci_high;
  double constant;
  uint64_t window_lo;
  uint64_t window_hi;
  size_t n_points;
} MixrateFit;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *mixrate_version(void);

// Copies the calling thread's last error message into `buf` (NUL
// terminated) and returns its length without the terminator. Returns 0
// when there is no error. Pass a null `buf` to query the length.
//
// # Safety
// `buf` must be null or valid for `len` bytes.
size_t mixrate_last_error(char *buf, size_t len);

// Builds a drift-rate function from a family and positional parameters:
// Linear `(eta)`, Polynomial `(c, alpha)`, SubexpLog `(c, v0, alpha)`,
// Logarithmic `(c, alpha)`.
//
// # Safety
// `params` must point to `n_params` doubles; `out` must be writable.
enum MixrateStatus mixrate_phi_new(enum MixratePhiFamily family,
                                   const double *params,
                                   size_t n_params,
                                   struct MixratePhi **out_phi);

// # Safety
// `phi` must be null or a handle from `mixrate_phi_new` not yet freed.
void mixrate_phi_free(struct MixratePhi *phi);

// `H_phi(v) = int_1^v dx / phi(x)`.
//
// # Safety
// `phi` must be a live handle and `out_value` writable.
enum MixrateStatus mixrate_phi_h(const struct MixratePhi *phi, double x, double *out_value);

// `H_phi^{-1}(z)`.
//
// # Safety
// `phi` must be a live handle and `out_value` writable.
enum MixrateStatus mixrate_phi_h_inv(const struct MixratePhi *phi, double x, double *out_value);

// `r_phi(z) = phi(H_phi^{-1}(z))`.
//
// # Safety
// `phi` must be a live handle and `out_value` writable.
enum MixrateStatus mixrate_phi_r(const struct MixratePhi *phi, double x, double *out_value);

// `ln r_phi(z)`, finite where `r_phi` overflows.
//
// # Safety
// `phi` must be a live handle and `out_value` writable.
enum MixrateStatus mixrate_phi_ln_r(const struct MixratePhi *phi, double x, double *out_value);

// SETAR regime of the given parameters.
//
// # Safety
// `thresholds` must hold `n_regimes - 1` doubles; `intercepts` and
// `slopes` must hold `n_regimes` doubles each.
enum MixrateStatus mixrate_classify_setar(const double *thresholds,
                                          const double *intercepts,
                                          const double *slopes,
                                          size_t n_regimes,
                                          enum MixrateRegime *out_regime);

// Two-state chain with switching probabilities `p` (0 to 1) and `q`.
//
// # Safety
// `out_chain` must be writable.
enum MixrateStatus mixrate_chain_two_state(double p, double q, struct MixrateChain **out_chain);

// Discretizes a SETAR model on `bins` cells over `[-half_width, half_width]`.
//
// # Safety
// Array arguments as in `mixrate_classify_setar`; `out_chain` writable.
enum MixrateStatus mixrate_chain_discretize_setar(const double *thresholds,
                                                  const double *intercepts,
                                                  const double *slopes,
                                                  size_t n_regimes,
                                                  enum MixrateNoise noise,
                                                  double scale,
                                                  double shape,
                                                  double half_width,
                                                  size_t bins,
                                                  struct MixrateChain **out_chain);

// # Safety
// `chain` must be null or a live chain handle.
void mixrate_chain_free(struct MixrateChain *chain);

// Number of states, or 0 for a null handle.
//
// # Safety
// `chain` must be null or a live chain handle.
size_t mixrate_chain_n_states(const struct MixrateChain *chain);

// Copies the stationary law into `out` (`len` must equal the number of
// states).
//
// # Safety
// `chain` live; `out_pi` valid for `len` doubles.
enum MixrateStatus mixrate_chain_stationary(const struct MixrateChain *chain,
                                            double *out_pi,
                                            size_t len);

// Exact stationary `beta(n)`.
//
// # Safety
// `chain` live; `out_value` writable.
enum MixrateStatus mixrate_chain_beta(const struct MixrateChain *chain,
                                      size_t n,
                                      double *out_value);

// `beta(n)` for `n = 1..n_max` as a series handle.
//
// # Safety
// `chain` live; `out_series` writable.
enum MixrateStatus mixrate_chain_beta_series(const struct MixrateChain *chain,
                                             size_t n_max,
                                             struct MixrateSeries **out_series);

// A stationary-beta series from parallel arrays. `stderrs` may be null
// (all zero). `floor` caps the fitting window from below.
//
// # Safety
// `ns` and `values` (and `stderrs` when non-null) valid for `len` items;
// `out_series` writable.
enum MixrateStatus mixrate_series_from_arrays(const uint64_t *ns,
                                              const double *values,
                                              const double *stderrs,
                                              size_t len,
                                              double floor,
                                              struct MixrateSeries **out_series);

// # Safety
// `series` must be null or a live series handle.
void mixrate_series_free(struct MixrateSeries *series);

// Number of points, or 0 for a null handle.
//
// # Safety
// `series` must be null or a live series handle.
size_t mixrate_series_len(const struct MixrateSeries *series);

// Reads point `i`. Any output pointer may be null.
//
// # Safety
// `series` live; non-null outputs writable.
enum MixrateStatus mixrate_series_get(const struct MixrateSeries *series,
                                      size_t i,
                                      uint64_t *out_n,
                                      double *out_value,
                                      double *out_stderr);

// Classifies the decay of a series with the default window.
//
// # Safety
// `series` live; `out_fit` writable.
enum MixrateStatus mixrate_fit_rate(const struct MixrateSeries *series, struct MixrateFit *out_fit);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MIXRATE_H */
