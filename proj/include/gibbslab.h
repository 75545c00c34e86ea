/* gibbslab C API: canonical point processes, stability probes, and quantized
 * Ding functionals on the Riemann sphere.
 *
 * All functions return gl_status (GL_OK on success). On failure a thread-local
 * message is available through gl_last_error(). Objects returned through
 * out-parameters are owned by the caller and released with the matching
 * *_free function. Rational parameters are passed as numerator/denominator
 * pairs and are exact. Marked points are chart complex numbers with a
 * separate at-infinity flag.
 */
#ifndef GIBBSLAB_H
#define GIBBSLAB_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum {
  GL_OK = 0,
  GL_ERR_INVALID_ARGUMENT = 1,
  GL_ERR_ZERO_VECTOR = 2,
  GL_ERR_NOT_UNIMODULAR = 3,
  GL_ERR_NOT_A_LINE_BUNDLE = 4,
  GL_ERR_UNSUPPORTED_GENUS = 5,
  GL_ERR_WRONG_GENUS = 6,
  GL_ERR_DIMENSION_MISMATCH = 7,
  GL_ERR_DEGREE_MISMATCH = 8,
  GL_ERR_SINGULAR_MATRIX = 9,
  GL_ERR_NOT_POSITIVE_DEFINITE = 10,
  GL_ERR_EMPTY_DIVISOR = 11,
  GL_ERR_BAD_STRATUM = 12,
  GL_ERR_DEGENERATE_FREEZE = 13,
  GL_ERR_UNSTABLE_TARGET = 14,
  GL_ERR_DIVERGENT_PARTITION = 15,
  GL_ERR_MAX_ITERATIONS = 16,
  GL_ERR_QUADRATURE_UNDERFLOW = 17,
  GL_ERR_NON_SMOOTH_METRIC = 18,
  GL_ERR_PARSE = 19,
  GL_ERR_IO = 20,
  GL_ERR_INTERNAL = 99
} gl_status;

typedef enum {
  GL_VERDICT_STABLE_PROBE_PASSED = 0,
  GL_VERDICT_UNSTABLE_WITNESS = 2,
  GL_VERDICT_INCONCLUSIVE = 3
} gl_verdict;

typedef struct gl_pair gl_pair;
typedef struct gl_report gl_report;

const char* gl_version(void);
const char* gl_last_error(void);

/* ------------------------------------------------------------------ pairs */

/* genus 0 or 1; n_marked points with chart coordinates (re, im) or the
 * at_infinity flag set, and exact weights w_num/w_den. Pass n_marked = 0 for
 * the bare sphere. */
gl_status gl_pair_create(int genus, const double* re, const double* im, const int* at_infinity,
                         const long long* w_num, const long long* w_den, int n_marked,
                         gl_pair** out);
void gl_pair_free(gl_pair* pair);

gl_status gl_dimension(const gl_pair* pair, long long k_num, long long k_den, int* out_dim);

/* Exact weight criterion: 1 true, 0 false, -1 not applicable. */
gl_status gl_weight_condition(const gl_pair* pair, int* out_tribool);

/* Exact log canonical threshold of a weighted divisor on the sphere.
 * out_infinite is set when no coefficient is positive. */
gl_status gl_lct_divisor(const double* re, const double* im, const int* at_infinity,
                         const long long* c_num, const long long* c_den, int n_terms,
                         long long* out_num, long long* out_den, int* out_infinite, int* out_klt);

/* log of the pointwise determinant norm at a configuration of dim(space)
 * points given in chart coordinates. */
gl_status gl_slater_log(const gl_pair* pair, long long k_num, long long k_den, const double* re,
                        const double* im, const int* at_infinity, int n_points, double* out_log,
                        int* out_is_zero);

/* ---------------------------------------------------------------- options */

typedef struct {
  long long budget;          /* MC samples per seed, or chain steps */
  int n_seeds;               /* independent seeds for MC diagnostics */
  unsigned long long seed;   /* base seed */
  int resolution;            /* quadrature resolution */
  int threads;               /* worker cap; 0 = GIBBSLAB_THREADS default */
  int force;                 /* run samplers despite instability witnesses */
} gl_run_options;

void gl_run_options_init(gl_run_options* options);

/* ---------------------------------------------------------------- reports */

gl_status gl_report_text(const gl_report* report, char* buffer, size_t buffer_len,
                         size_t* out_len);
/* Numeric field lookup; GL_ERR_INVALID_ARGUMENT when the key is absent. */
gl_status gl_report_number(const gl_report* report, const char* key, double* out);
/* Verdict carried by stability-style reports, -1 when absent. */
int gl_report_verdict(const gl_report* report);
void gl_report_free(gl_report* report);

/* ------------------------------------------------------------- operations */

gl_status gl_stability_probe(const gl_pair* pair, long long k_num, long long k_den,
                             long long gamma_num, long long gamma_den,
                             const gl_run_options* options, gl_report** out);

/* method: 0 = tensor quadrature (N <= 3), 1 = importance MC. */
gl_status gl_partition(const gl_pair* pair, long long k_num, long long k_den, long long gamma_num,
                       long long gamma_den, int method, const gl_run_options* options,
                       gl_report** out);

/* Runs the MH sampler and writes samples (CSV) plus a histogram (text).
 * Either path may be NULL to skip the artifact. */
gl_status gl_sample(const gl_pair* pair, long long k_num, long long k_den, long long gamma_num,
                    long long gamma_den, const gl_run_options* options, const char* csv_path,
                    const char* histogram_path, gl_report** out);

/* Minimizes the quantized Ding functional; optional iteration trace CSV. */
gl_status gl_ding_minimize(const gl_pair* pair, long long k_num, long long k_den,
                           long long gamma_num, long long gamma_den,
                           const gl_run_options* options, const char* trace_csv_path,
                           gl_report** out);

gl_status gl_inequality(const gl_pair* pair, long long k_num, long long k_den,
                        long long gamma_num, long long gamma_den, const gl_run_options* options,
                        gl_report** out);

/* Flow self-tests: which is one of "intertwine", "lifts", "nepsilon",
 * "hamiltonian", "all". Reports per-suite residuals; fails with
 * GL_ERR_INTERNAL if a residual exceeds its bound. */
gl_status gl_flows_selftest(const char* which, int trials, unsigned long long seed,
                            gl_report** out);

#ifdef __cplusplus
}
#endif

#endif /* GIBBSLAB_H */
