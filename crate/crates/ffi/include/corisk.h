#ifndef CORISK_H
#define CORISK_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Result of every fallible call. `Ok` is zero.
enum CoriskStatus
#if defined(__cplusplus) || __STDC_VERSION__ >= 202311L
  : int32_t
#endif // defined(__cplusplus) || __STDC_VERSION__ >= 202311L
 {
  CORISK_STATUS_OK = 0,
  CORISK_STATUS_INVALID_PARAMETER = 1,
  CORISK_STATUS_DIMENSION_MISMATCH = 2,
  CORISK_STATUS_OUT_OF_DOMAIN = 3,
  CORISK_STATUS_ZERO_PROBABILITY_EVENT = 4,
  CORISK_STATUS_NON_MONOTONE_DISTORTION = 5,
  CORISK_STATUS_NONINTEGRABLE_TAIL = 6,
  CORISK_STATUS_INSUFFICIENT_EXCESSES = 7,
  CORISK_STATUS_NUMERIC_FAILURE = 8,
  CORISK_STATUS_NON_CONVERGENCE = 9,
  CORISK_STATUS_NONPOSITIVE_BENCHMARK = 10,
  CORISK_STATUS_RARE_EVENT = 11,
  CORISK_STATUS_UNSUPPORTED = 12,
  CORISK_STATUS_INPUT = 13,
  CORISK_STATUS_VALIDATION = 14,
  CORISK_STATUS_NULL_POINTER = 100,
  CORISK_STATUS_INVALID_UTF8 = 101,
  CORISK_STATUS_PANIC = 102,
};
#ifndef __cplusplus
#if __STDC_VERSION__ >= 202311L
typedef enum CoriskStatus CoriskStatus;
#else
typedef int32_t CoriskStatus;
#endif // __STDC_VERSION__ >= 202311L
#endif // __cplusplus

// Opaque copula handle.
typedef struct CoriskCopula CoriskCopula;

// Opaque univariate loss distribution handle.
typedef struct CoriskMarginal CoriskMarginal;

// Opaque joint model handle: a copula with its marginals.
typedef struct CoriskModel CoriskModel;

// Measures and contribution measures for one target. Median-type fields are NaN
// when `has_median` is false.
typedef struct CoriskRiskReport {
  double var;
  double es;
  double mcovar;
  double mcoes;
  double mmme;
  double mmme_threshold;
  double stop_loss;
  double delta_mcovar;
  double delta_r_mcovar;
  double delta_mcoes;
  double delta_r_mcoes;
  double delta_mmme;
  double delta_r_mmme;
  bool has_median;
  double delta_med_mcovar;
  double delta_r_med_mcovar;
  double delta_med_mcoes;
  double delta_r_med_mcoes;
} CoriskRiskReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *corisk_version(void);

// Message for the last failed call on this thread, or NULL after a success.
// The pointer stays valid until the next call into the library on this thread.
const char *corisk_last_error_message(void);

// Stable lowercase name of a status code, e.g. `"out_of_domain"`; NULL for unknown codes.
// Error-kind names match the `error` field of CLI error records.
const char *corisk_status_name(int32_t status);

// # Safety
// `out` must be a valid pointer.
CoriskStatus corisk_copula_independence(size_t dim, struct CoriskCopula **out);

// Gaussian copula from a row-major `dim × dim` correlation matrix.
//
// # Safety
// `corr` must point to `dim * dim` doubles; `out` must be valid.
CoriskStatus corisk_copula_gaussian(size_t dim, const double *corr, struct CoriskCopula **out);

// # Safety
// `out` must be a valid pointer.
CoriskStatus corisk_copula_gumbel(size_t dim, double theta, struct CoriskCopula **out);

// # Safety
// `out` must be a valid pointer.
CoriskStatus corisk_copula_clayton(size_t dim, double theta, struct CoriskCopula **out);

// `w_gaussian·Gaussian + w_gumbel·Gumbel + (1 − w_gaussian − w_gumbel)·Clayton`.
//
// # Safety
// `corr` must point to `dim * dim` doubles; `out` must be valid.
CoriskStatus corisk_copula_mixture(size_t dim,
                                   double w_gaussian,
                                   double w_gumbel,
                                   const double *corr,
                                   double gumbel_theta,
                                   double clayton_theta,
                                   struct CoriskCopula **out);

// # Safety
// `c` must be NULL or a handle from a `corisk_copula_*` constructor, freed at most once.
void corisk_copula_free(struct CoriskCopula *c);

// Dimension of the copula, or 0 for NULL.
//
// # Safety
// `c` must be NULL or a live handle.
size_t corisk_copula_dim(const struct CoriskCopula *c);

// `C(u)`.
//
// # Safety
// `u` must point to `len` doubles; `c` and `out` must be valid.
CoriskStatus corisk_copula_cdf(const struct CoriskCopula *c,
                               const double *u,
                               size_t len,
                               double *out);

// `P(U_1 > p_1, …, U_n > p_n)`.
//
// # Safety
// `p` must point to `len` doubles; `c` and `out` must be valid.
CoriskStatus corisk_copula_survival(const struct CoriskCopula *c,
                                    const double *p,
                                    size_t len,
                                    double *out);

// # Safety
// `out` must be a valid pointer.
CoriskStatus corisk_marginal_exponential(double rate, struct CoriskMarginal **out);

// # Safety
// `out` must be a valid pointer.
CoriskStatus corisk_marginal_gamma(double shape, double scale, struct CoriskMarginal **out);

// # Safety
// `out` must be a valid pointer.
CoriskStatus corisk_marginal_weibull(double shape, double scale, struct CoriskMarginal **out);

// Pareto type I with support `[scale, ∞)`.
//
// # Safety
// `out` must be a valid pointer.
CoriskStatus corisk_marginal_pareto(double scale, double shape, struct CoriskMarginal **out);

// Generalized Pareto with shape `xi` and scale `beta`, location 0.
//
// # Safety
// `out` must be a valid pointer.
CoriskStatus corisk_marginal_gpd(double xi, double beta, struct CoriskMarginal **out);

// # Safety
// `m` must be NULL or a handle from a `corisk_marginal_*` constructor, freed at most once.
void corisk_marginal_free(struct CoriskMarginal *m);

// # Safety
// `m` and `out` must be valid.
CoriskStatus corisk_marginal_cdf(const struct CoriskMarginal *m, double x, double *out);

// # Safety
// `m` and `out` must be valid.
CoriskStatus corisk_marginal_quantile(const struct CoriskMarginal *m, double p, double *out);

// Joint model from a copula and `n` marginals. The inputs are copied; the caller
// keeps ownership of them.
//
// # Safety
// `marginals` must point to `n` live marginal handles; `copula` and `out` must be valid.
CoriskStatus corisk_model_new(const struct CoriskCopula *copula,
                              const struct CoriskMarginal *const *marginals,
                              size_t n,
                              struct CoriskModel **out);

// Model from JSON text: either a `model.json` written by `corisk fit` or a bare
// serialized joint model.
//
// # Safety
// `json` must be a NUL-terminated string; `out` must be valid.
CoriskStatus corisk_model_from_json(const char *json, struct CoriskModel **out);

// Reads a model file; see [`corisk_model_from_json`].
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be valid.
CoriskStatus corisk_model_load(const char *path, struct CoriskModel **out);

// # Safety
// `m` must be NULL or a handle from a `corisk_model_*` constructor, freed at most once.
void corisk_model_free(struct CoriskModel *m);

// Number of assets, or 0 for NULL.
//
// # Safety
// `m` must be NULL or a live handle.
size_t corisk_model_dim(const struct CoriskModel *m);

// `P(X_1 > x_1, …, X_n > x_n)` under the model.
//
// # Safety
// `x` must point to `len` doubles; `m` and `out` must be valid.
CoriskStatus corisk_model_survival(const struct CoriskModel *m,
                                   const double *x,
                                   size_t len,
                                   double *out);

// MCoVaR of asset `target` at level `p1` given the other assets exceed their `p_tail` quantiles.
//
// # Safety
// `p_tail` must point to `n_tail` doubles; `m` and `out` must be valid.
CoriskStatus corisk_mcovar(const struct CoriskModel *m,
                           size_t target,
                           double p1,
                           const double *p_tail,
                           size_t n_tail,
                           double *out);

// MCoES; arguments as for [`corisk_mcovar`].
//
// # Safety
// `p_tail` must point to `n_tail` doubles; `m` and `out` must be valid.
CoriskStatus corisk_mcoes(const struct CoriskModel *m,
                          size_t target,
                          double p1,
                          const double *p_tail,
                          size_t n_tail,
                          double *out);

// MMME with weights over the non-target assets; pass NULL and 0 for equal weights.
//
// # Safety
// `p_tail` must point to `n_tail` doubles and `weights` to `n_weights` doubles (or be NULL
// with `n_weights == 0`); `m` and `out` must be valid.
CoriskStatus corisk_mmme(const struct CoriskModel *m,
                         size_t target,
                         double p1,
                         const double *p_tail,
                         size_t n_tail,
                         const double *weights,
                         size_t n_weights,
                         double *out);

// Every measure and contribution measure for one target. With `require_median` false,
// tail levels at or below ½ leave the median fields NaN instead of failing.
//
// # Safety
// As for [`corisk_mmme`]; `out` must point to a `CoriskRiskReport`.
CoriskStatus corisk_contributions(const struct CoriskModel *m,
                                  size_t target,
                                  double p1,
                                  const double *p_tail,
                                  size_t n_tail,
                                  const double *weights,
                                  size_t n_weights,
                                  bool require_median,
                                  struct CoriskRiskReport *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CORISK_H */
