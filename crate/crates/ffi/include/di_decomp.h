#ifndef DI_DECOMP_H
#define DI_DECOMP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum DdStatus {
  DD_STATUS_OK = 0,
  /*
   Null pointer, zero length or an otherwise unusable argument.
   */
  DD_STATUS_INVALID_ARGUMENT = 1,
  DD_STATUS_CONFIG = 2,
  DD_STATUS_DATA = 3,
  DD_STATUS_NUMERICAL = 4,
  /*
   A Rust panic was caught at the boundary.
   */
  DD_STATUS_PANIC = 5,
} DdStatus;

typedef struct DdDecomposition DdDecomposition;

typedef struct DdOlsFit DdOlsFit;

typedef struct DdPlsModel DdPlsModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Library version as a static NUL-terminated string.
 */
const char *dd_version(void);

/*
 Message of the last failed call on this thread, or NULL. The pointer
 stays valid until the next call into the library from the same thread.
 */
const char *dd_last_error_message(void);

/*
 Two-sided Student-t p-value.

 # Safety
 `out` must be valid for one write.
 */
enum DdStatus dd_student_t_two_sided_p(double t, size_t dof, double *out);

/*
 OLS of `y` (length `n`) on the `k` columns of `x`, optionally with an intercept.

 # Safety
 `y` must hold `n` values, `x` must hold `n * k` values, `out` must be valid for one write.
 */
enum DdStatus dd_ols_fit(const double *y,
                         const double *x,
                         size_t n,
                         size_t k,
                         bool intercept,
                         struct DdOlsFit **out);

/*
 Number of estimated coefficients (intercept first when present).

 # Safety
 `fit` must come from [`dd_ols_fit`] or be NULL.
 */
size_t dd_ols_n_coefficients(const struct DdOlsFit *fit);

/*
 Copies coefficient statistics into caller buffers of length `len`, which
 must equal [`dd_ols_n_coefficients`]. Any output pointer may be NULL.

 # Safety
 Non-null outputs must be valid for `len` writes.
 */
enum DdStatus dd_ols_coefficients(const struct DdOlsFit *fit,
                                  double *coefficients,
                                  double *std_errors,
                                  double *t_statistics,
                                  double *p_values,
                                  size_t len);

/*
 # Safety
 Non-null outputs must be valid for one write.
 */
enum DdStatus dd_ols_r_squared(const struct DdOlsFit *fit,
                               double *r_squared,
                               double *adj_r_squared);

/*
 # Safety
 `fit` must come from [`dd_ols_fit`] and not be used afterwards.
 */
void dd_ols_free(struct DdOlsFit *fit);

/*
 One-component PLS of `y` on the `k` columns of `x`.

 # Safety
 `x` must hold `n * k` values, `y` `n` values; `out` must be valid for one write.
 */
enum DdStatus dd_pls_fit(const double *x,
                         size_t n,
                         size_t k,
                         const double *y,
                         struct DdPlsModel **out);

/*
 Copies the `len` unit-norm weights (one per input column).

 # Safety
 `weights` must be valid for `len` writes.
 */
enum DdStatus dd_pls_weights(const struct DdPlsModel *model, double *weights, size_t len);

/*
 Applies the fitted model to `n` new rows; writes the factor into `out`.

 # Safety
 `x` must hold `n * k` values and `out` must be valid for `n` writes.
 */
enum DdStatus dd_pls_apply(const struct DdPlsModel *model,
                           const double *x,
                           size_t n,
                           size_t k,
                           double *out);

/*
 # Safety
 `model` must come from [`dd_pls_fit`] and not be used afterwards.
 */
void dd_pls_free(struct DdPlsModel *model);

/*
 Splits date-aligned CDS returns into global (fitted, intercept included)
 and domestic (residual) parts. `coefficients` receives alpha followed by
 the DXY, CRB, VIX and UST10 loadings and may be NULL.

 # Safety
 Inputs must hold `n` values; `glob` and `dom` must be valid for `n`
 writes; `coefficients`, if non-null, for 5.
 */
enum DdStatus dd_cds_split(const double *cds,
                           const double *dxy,
                           const double *crb,
                           const double *vix,
                           const double *ust10,
                           size_t n,
                           double *glob,
                           double *dom,
                           double *coefficients);

/*
 Fits the decomposition on aligned arrays of daily bps changes and the
 three factors, and derives contributions and running sums.

 # Safety
 Inputs must hold `n` values; `out` must be valid for one write.
 */
enum DdStatus dd_decomposition_fit(const double *d_di5y_bps,
                                   const double *macro_factor,
                                   const double *cds_dom,
                                   const double *cds_glob,
                                   size_t n,
                                   struct DdDecomposition **out);

/*
 Number of rows in the decomposition.

 # Safety
 `h` must come from [`dd_decomposition_fit`] or be NULL.
 */
size_t dd_decomposition_len(const struct DdDecomposition *h);

/*
 Writes `[beta0, beta_macro, beta_dom, beta_glob]`.

 # Safety
 `betas` must be valid for 4 writes.
 */
enum DdStatus dd_decomposition_betas(const struct DdDecomposition *h, double *betas);

/*
 Daily contributions in bps. Buffers hold `len` values (the decomposition
 length); any of them may be NULL.

 # Safety
 Non-null outputs must be valid for `len` writes.
 */
enum DdStatus dd_decomposition_contributions(const struct DdDecomposition *h,
                                             double *constant,
                                             double *macro_contrib,
                                             double *riscobr,
                                             double *global,
                                             double *residual,
                                             size_t len);

/*
 Running sums of the change and of each contribution.

 # Safety
 Non-null outputs must be valid for `len` writes.
 */
enum DdStatus dd_decomposition_cumulative(const struct DdDecomposition *h,
                                          double *total,
                                          double *constant,
                                          double *macro_contrib,
                                          double *riscobr,
                                          double *global,
                                          double *residual,
                                          size_t len);

/*
 Variance shares of the macro, domestic and global contributions.

 # Safety
 `shares` must be valid for 3 writes.
 */
enum DdStatus dd_decomposition_variance_shares(const struct DdDecomposition *h, double *shares);

/*
 # Safety
 `h` must come from [`dd_decomposition_fit`] and not be used afterwards.
 */
void dd_decomposition_free(struct DdDecomposition *h);

/*
 Runs the full pipeline from a TOML config file. `out_dir` overrides the
 configured output directory when non-NULL.

 # Safety
 Both arguments must be NUL-terminated UTF-8 strings or (for `out_dir`) NULL.
 */
enum DdStatus dd_run_pipeline(const char *config_path, const char *out_dir);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DI_DECOMP_H */
