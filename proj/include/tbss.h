/* tbss — blind source separation for matrix- and tensor-valued samples.
 *
 * C interface to the shared library.  All functions returning tbss_status
 * report failures through the return code; tbss_last_error() then holds a
 * human-readable message for the calling thread.  Objects created through
 * this interface are released with the matching *_free function; strings
 * returned through char** parameters are released with tbss_string_free.
 */
#ifndef TBSS_H
#define TBSS_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define TBSS_API __declspec(dllexport)
#else
#define TBSS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tbss_status {
  TBSS_OK = 0,
  TBSS_INVALID_ARGUMENT = 1,
  TBSS_SHAPE_MISMATCH = 2,
  TBSS_INSUFFICIENT_SAMPLE = 3,
  TBSS_SINGULAR_COVARIANCE = 4,
  TBSS_SIZE_LIMIT = 5,
  TBSS_IO_ERROR = 6,
  TBSS_INTERNAL = 7
} tbss_status;

/* Opaque handles. */
typedef struct tbss_sample tbss_sample;
typedef struct tbss_result tbss_result;

/* Library version, "major.minor.patch". */
TBSS_API const char* tbss_version(void);

/* Message for the last failing call on this thread ("" if none). */
TBSS_API const char* tbss_last_error(void);

/* ------------------------------------------------------------------ */
/* Samples: n observations of a real tensor with the given extents.    */
/* Observations are stored contiguously; within an observation the     */
/* elements are in row-major order (last index fastest).               */

/* Copies data (n * dims[0] * ... * dims[order-1] doubles); data may be
 * NULL to create a zero-filled sample. */
TBSS_API tbss_status tbss_sample_create(const int64_t* dims, size_t order,
                                        int64_t n, const double* data,
                                        tbss_sample** out);

/* Reads a sample in the TBSS1 container format (see README). */
TBSS_API tbss_status tbss_sample_read(const char* path, tbss_sample** out);

/* Reads CSV text: one observation per line, comma-separated values in
 * row-major order; blank lines are ignored. */
TBSS_API tbss_status tbss_sample_read_csv(const char* path, const int64_t* dims,
                                          size_t order, tbss_sample** out);

/* Writes the TBSS1 container.  The file appears atomically: output goes to a
 * temporary sibling first and is renamed into place. */
TBSS_API tbss_status tbss_sample_write(const tbss_sample* s, const char* path);

TBSS_API size_t tbss_sample_order(const tbss_sample* s);
/* mode is 1-based; returns 0 if out of range. */
TBSS_API int64_t tbss_sample_dim(const tbss_sample* s, size_t mode);
TBSS_API int64_t tbss_sample_n(const tbss_sample* s);
/* Borrowing pointer to the observation buffer; valid until the sample is
 * freed or mutated. */
TBSS_API const double* tbss_sample_data(const tbss_sample* s);
TBSS_API void tbss_sample_free(tbss_sample* s);

/* ------------------------------------------------------------------ */
/* Fitting.                                                            */

typedef struct tbss_fit_options {
  double tolerance; /* joint-diagonalization rotation threshold */
  int max_sweeps;   /* joint-diagonalization sweep cap */
  int64_t rho_cap;  /* vectorized fits refuse products of extents above this */
} tbss_fit_options;

/* Fills in the defaults: tolerance 1e-6, max_sweeps 100, rho_cap 64. */
TBSS_API void tbss_fit_options_init(tbss_fit_options* opts);

/* Fits one estimator per mode.  methods[m] is one of "skip", "tfobi",
 * "tjade", "ktjade"; ks[m] is the band width for "ktjade" (ignored
 * otherwise; ks may be NULL if no mode uses "ktjade").  n_modes must equal
 * the sample order.  opts may be NULL for defaults. */
TBSS_API tbss_status tbss_fit(const tbss_sample* s, const char* const* methods,
                              const int64_t* ks, size_t n_modes,
                              const tbss_fit_options* opts, tbss_result** out);

/* Vectorizes each observation and fits a single matrix estimator to the
 * resulting rho x 1 data.  method is "tfobi", "tjade" or "ktjade". */
TBSS_API tbss_status tbss_fit_vectorized(const tbss_sample* s, const char* method,
                                         int64_t k, const tbss_fit_options* opts,
                                         tbss_result** out);

/* Fits an estimator by name: "tfobi", "tjade", "<digits>-tjade" (one digit
 * per mode, 0 = skip that mode), "ktjade:k1,k2,...", "vfobi", "vjade",
 * "<k>-vjade", "kvjade:<k>". */
TBSS_API tbss_status tbss_fit_named(const tbss_sample* s, const char* estimator,
                                    const tbss_fit_options* opts,
                                    tbss_result** out);

/* ------------------------------------------------------------------ */
/* Results.                                                            */

/* 1 for vectorized fits (a single unmixing of size rho), else 0. */
TBSS_API int tbss_result_vectorized(const tbss_result* r);
/* Number of unmixing matrices: tensor order, or 1 when vectorized. */
TBSS_API size_t tbss_result_mode_count(const tbss_result* r);
/* Side length of the unmixing matrix of the 1-based mode; 0 if out of range. */
TBSS_API int64_t tbss_result_mode_dim(const tbss_result* r, size_t mode);
TBSS_API int64_t tbss_result_n(const tbss_result* r);

/* Copies the mode's unmixing matrix, row-major, into out (dim*dim doubles). */
TBSS_API tbss_status tbss_result_unmixing(const tbss_result* r, size_t mode,
                                          double* out);
/* Copies the mode's estimated mean excess kurtosis per source row (dim
 * doubles, non-increasing). */
TBSS_API tbss_status tbss_result_kurtosis(const tbss_result* r, size_t mode,
                                          double* out);
/* Method fitted on the 1-based mode: "skip", "tfobi", "tjade" or "ktjade";
 * NULL if out of range. */
TBSS_API const char* tbss_result_mode_method(const tbss_result* r, size_t mode);
/* Band width used by the mode (meaningful for "ktjade"); 0 if out of range. */
TBSS_API int64_t tbss_result_mode_k(const tbss_result* r, size_t mode);
/* Per-mode fit diagnostics; any out pointer may be NULL.  kappa_spread is the
 * max minus min estimated kurtosis; low_kappa_spread flags a spread under 0.1,
 * where the source ordering is unreliable. */
TBSS_API tbss_status tbss_result_mode_stats(const tbss_result* r, size_t mode,
                                            int* sweeps, int* converged,
                                            double* stage_ms, double* kappa_spread,
                                            int* low_kappa_spread);
/* Recovered latent sample (centered input with every unmixing applied).
 * Results read back from disk carry no latent sample; that yields
 * TBSS_INVALID_ARGUMENT. */
TBSS_API tbss_status tbss_result_latent(const tbss_result* r, tbss_sample** out);

/* JSON document with shape, options and per-mode estimates/diagnostics. */
TBSS_API tbss_status tbss_result_to_json(const tbss_result* r, char** out);
TBSS_API tbss_status tbss_result_write(const tbss_result* r, const char* path);
TBSS_API tbss_status tbss_result_read(const char* path, tbss_result** out);
TBSS_API void tbss_result_free(tbss_result* r);

/* ------------------------------------------------------------------ */
/* Metrics.                                                            */

/* Minimum distance index of a gain matrix (estimate times true mixing),
 * row-major, rows == cols >= 2.  Ranges over [0, 1]; 0 means perfect
 * recovery up to order, sign and scale. */
TBSS_API tbss_status tbss_md_index(const double* gain, int64_t rows, int64_t cols,
                                   double* out);

/* Per-mode minimum distance between two fits of equal shape: index of
 * gamma_a * inverse(gamma_b) for each mode.  out needs mode_count doubles. */
TBSS_API tbss_status tbss_md_between(const tbss_result* a, const tbss_result* b,
                                     double* out);

/* Tuning scree for one 1-based mode: fits every band width k on that mode
 * and reports the mean inverse-relative distances m*_k for k = 1..dim-1 as
 * TSV text (columns: mode, k, mstar). */
TBSS_API tbss_status tbss_scree(const tbss_sample* s, size_t mode,
                                const tbss_fit_options* opts, char** out_tsv);

/* ------------------------------------------------------------------ */
/* Simulation and benchmarks.                                          */

/* Replicated recovery study on one of the built-in latent layouts
 * (setting 1, 2 or 3).  ns may be NULL to use {1000, 2000}; replicates <= 0
 * means 50; scenarios_csv is a comma list of "identity", "orthogonal",
 * "gaussian" (NULL means "identity"); estimators_csv NULL picks the
 * setting's default list; threads <= 0 picks the hardware count.  Returns
 * TSV text (columns: estimator, scenario, n, replicates, failures,
 * mean_tmd, sd_tmd, median_md, mean_fit_ms). */
TBSS_API tbss_status tbss_simulate(int setting, const int64_t* ns, size_t n_ns,
                                   int replicates, const char* scenarios_csv,
                                   const char* estimators_csv, uint64_t seed,
                                   const tbss_fit_options* opts, int threads,
                                   char** out_tsv);

/* Mean fit wall time over a grid of matrix widths q (observations are
 * 3 x q).  estimators_csv NULL means "tfobi,11-tjade,22-tjade,tjade".
 * Returns TSV text (columns: estimator, q, n, iterations, mean_seconds). */
TBSS_API tbss_status tbss_bench(const int64_t* widths, size_t n_widths, int64_t n,
                                const char* estimators_csv, uint64_t seed,
                                int iterations, const tbss_fit_options* opts,
                                char** out_tsv);

/* Frees strings returned through char** parameters. */
TBSS_API void tbss_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif /* TBSS_H */
