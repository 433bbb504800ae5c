#ifndef HYBRIDNOISE_H
#define HYBRIDNOISE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum HnStatus {
  HN_STATUS_OK = 0,
  HN_STATUS_INVALID_ARGUMENT = 1,
  HN_STATUS_NULL_POINTER = 2,
  HN_STATUS_INVALID_DOMAIN = 3,
  HN_STATUS_DEGENERATE_MIXTURE = 4,
  HN_STATUS_TRUNCATION_INADEQUATE = 5,
  HN_STATUS_QUADRATURE_FAILURE = 6,
  HN_STATUS_UNSUPPORTED_RATE = 7,
  HN_STATUS_PARAMETER_MISMATCH = 8,
  HN_STATUS_BUFFER_TOO_SMALL = 9,
  HN_STATUS_PANIC = 10,
} HnStatus;

typedef enum HnEntropyMethod {
  HN_ENTROPY_METHOD_QUADRATURE = 0,
  HN_ENTROPY_METHOD_MONTE_CARLO = 1,
} HnEntropyMethod;

// Truncated hybrid-noise mixture.
typedef struct HnMixture HnMixture;

// Rows of an adequacy sweep, ordered by rate then order.
typedef struct HnSweep HnSweep;

// Adequacy thresholds; `sup_norm_rel` is relative to the reference peak.
typedef struct HnThresholds {
  double tail_mass;
  double sup_norm_rel;
} HnThresholds;

// Evaluation domain `[lo, hi]` with `grid_points` equally spaced points.
typedef struct HnDomain {
  double lo;
  double hi;
  size_t grid_points;
} HnDomain;

typedef struct HnReport {
  double lambda;
  size_t order;
  double tail_mass;
  double sup_norm;
  double l1_distance;
  double kl_divergence_bits;
  bool adequate;
  bool reference_capped;
} HnReport;

typedef struct HnEntropy {
  // Bits.
  double value;
  enum HnEntropyMethod method;
  // Quadrature error estimate or Monte Carlo standard error.
  double error;
  size_t sample_count;
} HnEntropy;

typedef struct HnGof {
  double ks_statistic;
  size_t sample_count;
  double critical_value_5pct;
  bool pass;
} HnGof;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the most recent failure on the calling thread, or an empty
// string. The pointer stays valid until the next failing call on the same
// thread and must not be freed.
const char *hn_last_error_message(void);

// Static, NUL-terminated name of a status code.
const char *hn_status_name(enum HnStatus status);

struct HnThresholds hn_thresholds_default(void);

// Builds the order-`order` truncation of the mixture with Gaussian
// `N(mean, sd^2)` and Poisson rate `lambda`.
//
// # Safety
// `out` must be null or valid for writes. On success `*out` receives a
// handle to release with [`hn_mixture_free`].
enum HnStatus hn_mixture_new(double mean,
                             double sd,
                             double lambda,
                             size_t order,
                             struct HnMixture **out);

// # Safety
// `m` must be null or a handle from this library that has not been freed.
void hn_mixture_free(struct HnMixture *m);

// New handle with weights divided by their sum.
//
// # Safety
// `m` must be a live handle; `out` must be valid for writes.
enum HnStatus hn_mixture_renormalize(const struct HnMixture *m, struct HnMixture **out);

// # Safety
// `m` must be a live handle; `out` must be valid for writes.
enum HnStatus hn_mixture_order(const struct HnMixture *m, size_t *out);

// Sum of the retained weights.
//
// # Safety
// `m` must be a live handle; `out` must be valid for writes.
enum HnStatus hn_mixture_total_weight(const struct HnMixture *m, double *out);

// Copies the `order + 1` weights into `buf`. `*needed` always receives the
// weight count; if `len` is smaller nothing is copied and
// `HN_STATUS_BUFFER_TOO_SMALL` is returned.
//
// # Safety
// `m` must be a live handle, `buf` valid for `len` writes, `needed` null or
// valid for writes.
enum HnStatus hn_mixture_weights(const struct HnMixture *m,
                                 double *buf,
                                 size_t len,
                                 size_t *needed);

// Density at `z`.
//
// # Safety
// `m` must be a live handle; `out` must be valid for writes.
enum HnStatus hn_mixture_pdf(const struct HnMixture *m, double z, double *out);

// Natural log of the density at `z`, finite far into the tails.
//
// # Safety
// `m` must be a live handle; `out` must be valid for writes.
enum HnStatus hn_mixture_ln_pdf(const struct HnMixture *m, double z, double *out);

// Cumulative distribution at `z` (tends to the total weight, not 1, unless
// the mixture is renormalized).
//
// # Safety
// `m` must be a live handle; `out` must be valid for writes.
enum HnStatus hn_mixture_cdf(const struct HnMixture *m, double z, double *out);

// Density at each of `n` points.
//
// # Safety
// `m` must be a live handle; `z` valid for `n` reads and `out` for `n`
// writes.
enum HnStatus hn_mixture_pdf_many(const struct HnMixture *m,
                                  const double *z,
                                  size_t n,
                                  double *out);

// Mean and variance, of the truncated weights as given or after
// renormalization.
//
// # Safety
// `m` must be a live handle; `mean` and `variance` valid for writes.
enum HnStatus hn_mixture_moments(const struct HnMixture *m,
                                 bool renormalized,
                                 double *mean,
                                 double *variance);

// Poisson weight `e^-lambda lambda^i / i!`.
//
// # Safety
// `out` must be valid for writes.
enum HnStatus hn_poisson_weight(double lambda, uint64_t i, double *out);

// Poisson probability discarded by keeping components `0..=order`.
//
// # Safety
// `out` must be valid for writes.
enum HnStatus hn_tail_mass(double lambda, size_t order, double *out);

// Smallest order whose tail mass is at most `epsilon`.
//
// # Safety
// `out` must be valid for writes.
enum HnStatus hn_minimal_components(double lambda, double epsilon, size_t *out);

// Compares the order-`order` truncation with a high-order reference.
// `domain` and `thresholds` may be null for the defaults.
//
// # Safety
// `domain` and `thresholds` must be null or valid for reads; `out` valid for
// writes.
enum HnStatus hn_approximation_report(double mean,
                                      double sd,
                                      double lambda,
                                      size_t order,
                                      const struct HnDomain *domain,
                                      const struct HnThresholds *thresholds,
                                      struct HnReport *out);

// Evaluates every `(lambda, order)` pair. `thresholds` may be null for the
// defaults; `threads = 0` lets the runtime choose.
//
// # Safety
// `lambdas` and `orders` must be valid for `n_lambdas` and `n_orders` reads,
// `thresholds` null or valid, `out` valid for writes. On success `*out`
// receives a handle to release with [`hn_sweep_free`].
enum HnStatus hn_sweep_new(double mean,
                           double sd,
                           const double *lambdas,
                           size_t n_lambdas,
                           const size_t *orders,
                           size_t n_orders,
                           const struct HnThresholds *thresholds,
                           size_t threads,
                           struct HnSweep **out);

// # Safety
// `s` must be a live sweep handle; `out` valid for writes.
enum HnStatus hn_sweep_len(const struct HnSweep *s, size_t *out);

// # Safety
// `s` must be a live sweep handle; `out` valid for writes.
enum HnStatus hn_sweep_row(const struct HnSweep *s, size_t index, struct HnReport *out);

// # Safety
// `s` must be null or a sweep handle that has not been freed.
void hn_sweep_free(struct HnSweep *s);

// Entropy in bits by adaptive quadrature. `domain` may be null for the
// mixture's default domain; `tolerance <= 0` selects the default. On
// `HN_STATUS_QUADRATURE_FAILURE` `out` holds the best estimate.
//
// # Safety
// `m` must be a live handle, `domain` null or valid, `out` valid for writes.
enum HnStatus hn_entropy_quadrature(const struct HnMixture *m,
                                    const struct HnDomain *domain,
                                    double tolerance,
                                    bool override_tail_check,
                                    struct HnEntropy *out);

// Monte Carlo entropy in bits from `n` seeded draws.
//
// # Safety
// `m` must be a live handle; `out` valid for writes.
enum HnStatus hn_entropy_monte_carlo(const struct HnMixture *m,
                                     size_t n,
                                     uint64_t seed,
                                     bool override_tail_check,
                                     struct HnEntropy *out);

// Gaussian lower and upper bounds on the entropy, in bits.
//
// # Safety
// `m` must be a live handle; `lower` and `upper` valid for writes.
enum HnStatus hn_entropy_bounds(const struct HnMixture *m, double *lower, double *upper);

// Writes `count` seeded draws of `Poisson(lambda) + N(mean, sd^2)` to `out`.
//
// # Safety
// `out` must be valid for `count` writes.
enum HnStatus hn_sample_hybrid(double mean,
                               double sd,
                               double lambda,
                               uint64_t seed,
                               double *out,
                               size_t count);

// Kolmogorov-Smirnov test of `n` values, drawn with the mixture's own
// `(lambda, mean, sd)`, against its renormalized CDF.
//
// # Safety
// `m` must be a live handle, `values` valid for `n` reads, `out` valid for
// writes.
enum HnStatus hn_ks_test(const struct HnMixture *m,
                         const double *values,
                         size_t n,
                         struct HnGof *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HYBRIDNOISE_H */
