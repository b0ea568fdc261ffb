#ifndef FREESING_H
#define FREESING_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  ifdef FREESING_BUILDING
#    define FS_API __declspec(dllexport)
#  else
#    define FS_API __declspec(dllimport)
#  endif
#else
#  define FS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Every call returns a status; on failure fs_last_error() describes it
   (per thread, valid until the next failing call on that thread). */
typedef enum fs_status {
    FS_OK = 0,
    FS_INVALID_ARGUMENT = 1,
    FS_CONFIG,
    FS_NON_CONVERGENT,
    FS_DIVERGENT,
    FS_ON_SUPPORT,
    FS_WRONG_KIND,
    FS_OUT_OF_RANGE,
    FS_BRACKET_FAILURE,
    FS_UNCLASSIFIED,
    FS_SIDE_UNDEFINED,
    FS_INSUFFICIENT_SAMPLES,
    FS_NON_POSITIVE,
    FS_INSTABILITY,
    FS_TRUNCATION_TOO_TIGHT,
    FS_NEWTON_DIVERGED,
    FS_EIGEN_FAILURE,
    FS_EMPTY_RANGE,
    FS_INTERNAL
} fs_status;

typedef enum fs_kind { FS_INTERIOR = 0, FS_RIGHT_EDGE = 1, FS_LEFT_EDGE = 2 } fs_kind;
typedef enum fs_side { FS_LEFT = 0, FS_RIGHT = 1, FS_BOTH = 2 } fs_side;
typedef enum fs_case {
    FS_SUBCRITICAL = 0, FS_CASE_I, FS_CASE_II_PLUS, FS_CASE_II_MINUS, FS_CASE_III, FS_CASE_IV, FS_CASE_V
} fs_case;

typedef struct fs_measure fs_measure;
typedef struct fs_config fs_config;
typedef struct fs_kernel fs_kernel;
typedef struct fs_ue_sampler fs_ue_sampler;

FS_API const char* fs_version(void);
FS_API const char* fs_last_error(void);
FS_API const char* fs_status_name(fs_status s);
FS_API const char* fs_case_name(fs_case c);
FS_API const char* fs_kind_name(fs_kind k);

/* ---- measures ---------------------------------------------------------- */

typedef struct fs_segment {
    double a, b;
    const char* density;     /* expression in s */
    double alpha_a, alpha_b; /* endpoint exponents */
} fs_segment;

typedef struct fs_singular {
    double x_star;
    fs_kind kind;
    int k;
    double c0;
    double kappa, gamma;
} fs_singular;

FS_API fs_status fs_measure_semicircle(double tau, fs_measure** out);
FS_API fs_status fs_measure_jacobi_power(double C, double alpha, double beta, double a, double b,
                                         double declared_mass, fs_measure** out);
FS_API fs_status fs_measure_poly_times_sqrt(const double* coeffs, size_t count, double radius,
                                            double declared_mass, fs_measure** out);
FS_API fs_status fs_measure_atoms(const double* locations, const double* masses, size_t count,
                                  double declared_mass, fs_measure** out);
FS_API fs_status fs_measure_expression(const fs_segment* segments, size_t count, double declared_mass,
                                       fs_measure** out);
FS_API fs_measure* fs_measure_clone(const fs_measure* m);
FS_API void fs_measure_free(fs_measure* m);

/* Derives the factorization at x_star for builtin families and attaches it. */
FS_API fs_status fs_measure_derive_singular(fs_measure* m, double x_star);
/* Attaches an explicit factorization; h is an expression in s with h(x_star) = 1. */
FS_API fs_status fs_measure_declare_singular(fs_measure* m, double x_star, fs_kind kind, int k,
                                             double c0, const char* h);
FS_API size_t fs_measure_singular_count(const fs_measure* m);
FS_API fs_status fs_measure_singular(const fs_measure* m, size_t index, fs_singular* out);

FS_API fs_status fs_measure_support(const fs_measure* m, double* lo, double* hi);
FS_API fs_status fs_measure_mass(const fs_measure* m, double* out);
FS_API fs_status fs_measure_integrate(const fs_measure* m, const char* f, double* out);
FS_API fs_status fs_cauchy_transform(const fs_measure* m, double re, double im, double* g_re,
                                     double* g_im);
FS_API fs_status fs_moment_g(const fs_measure* m, double x_star, int j, double* out);
FS_API fs_status fs_measure_quantiles(const fs_measure* m, int n, double* out);

/* ---- free convolution -------------------------------------------------- */

FS_API fs_status fs_tau_crit(const fs_measure* m, double x_star, double* out);
FS_API fs_status fs_x_star_tau(const fs_measure* m, double x_star, double tau, double* out);
FS_API fs_status fs_density(const fs_measure* m, double tau, const double* x, size_t count, double* psi);

/* ---- singular points --------------------------------------------------- */

typedef struct fs_critical {
    double x_star;
    fs_kind kind;
    int k;
    double kappa, gamma, c0;
    double tau, tau_crit, x_star_tau, x_star_tau_crit;
    double c_tau;  /* NaN at criticality */
    double pv, r, theta, g2, g3; /* NaN where undefined */
    fs_case label;
} fs_critical;

typedef struct fs_power_law {
    double exponent, prefactor, residual;
    double window_lo, window_hi;
    fs_side side;
} fs_power_law;

FS_API fs_status fs_classify(const fs_measure* m, double x_star, double tau, fs_critical* out);
/* Moments g_0 .. g_{2k} used by the classification; writes up to cap values. */
FS_API fs_status fs_critical_moments(const fs_measure* m, double x_star, double* out, size_t cap,
                                     size_t* count);
FS_API fs_status fs_predicted_local_law(const fs_measure* m, double x_star, double tau, fs_side side,
                                        fs_power_law* out);
/* Samples (distance, psi) on count log-spaced offsets in [lo, hi] on one side of x*_tau. */
FS_API fs_status fs_local_samples(const fs_measure* m, double x_star, double tau, fs_side side, double lo,
                                  double hi, int count, double* distance, double* psi);
FS_API fs_status fs_fit_power_law(const double* distance, const double* psi, size_t count, double lo,
                                  double hi, fs_power_law* out);

/* ---- finite-n kernels -------------------------------------------------- */

typedef struct fs_kernel_value {
    double value, imag, error;
} fs_kernel_value;

typedef struct fs_gauge {
    double u, t, s_n, R_n, R_hat, H_hat, residual;
} fs_gauge;

/* V has ascending coefficients. When m is given, its singular point at x_star
   supplies the local scaling used by the rescaled kernel and the gauge. */
FS_API fs_status fs_kernel_create(const double* V, size_t vcount, int n, int degree_max,
                                  const fs_measure* m, double x_star, fs_kernel** out);
FS_API void fs_kernel_free(fs_kernel* k);
FS_API fs_status fs_kernel_recurrence(const fs_kernel* k, double* a, double* b, size_t cap);
FS_API fs_status fs_kernel_M(const fs_kernel* k, double x, double y, double* out);
FS_API fs_status fs_kernel_X(const fs_kernel* k, double x, double y, double tau, fs_kernel_value* out);
FS_API fs_status fs_kernel_multitime(const fs_kernel* k, double x, double y, double t, double tprime,
                                     fs_kernel_value* out);
FS_API fs_status fs_kernel_rescaled(const fs_kernel* k, double u, double v, double t, double tprime,
                                    double* out);
FS_API fs_status fs_kernel_gauge(const fs_kernel* k, double u, double t, fs_gauge* out);
/* n x n row-major overlap matrix at time t. */
FS_API fs_status fs_kernel_overlap(const fs_kernel* k, double t, double* out);
FS_API fs_status fs_kernel_log_G(int n, double x, double y, double t, double tprime, double* out);

/* ---- Monte Carlo ------------------------------------------------------- */

FS_API fs_status fs_sample_gue_eigs(int n, uint64_t seed, uint64_t stream, double* out);
FS_API fs_status fs_sample_perturbed(const double* eigs, size_t n, double tau, uint64_t seed,
                                     uint64_t stream, double* out);
/* steps = 0 and burn_in = 0 select the defaults (10 n updates, 500 sweeps). */
FS_API fs_status fs_ue_sampler_create(const double* V, size_t vcount, int n, uint64_t seed, uint64_t stream,
                                      int steps, int burn_in, fs_ue_sampler** out);
FS_API fs_status fs_ue_sampler_next(fs_ue_sampler* s, double* out);
FS_API double fs_ue_sampler_acceptance(const fs_ue_sampler* s);
/* 1 when the acceptance rate lies outside [0.2, 0.6]. */
FS_API int fs_ue_sampler_mixing_warning(const fs_ue_sampler* s);
FS_API void fs_ue_sampler_free(fs_ue_sampler* s);
/* initial: replicas x n eigenvalues; out: replicas x ntimes x n. */
FS_API fs_status fs_sample_nibm(const double* initial, int n, int replicas, const double* times,
                                size_t ntimes, uint64_t seed, uint64_t stream_base, double* out,
                                int* resampled);
FS_API fs_status fs_histogram(const double* samples, size_t count, double lo, double hi, int bins,
                              double* centers, double* heights);
FS_API fs_status fs_ks_two_sample(const double* a, size_t na, const double* b, size_t nb,
                                  double* statistic, double* p_value);

/* ---- configuration ----------------------------------------------------- */

FS_API fs_status fs_config_load(const char* path, fs_config** out);
FS_API fs_status fs_config_parse(const char* text, fs_config** out);
FS_API void fs_config_free(fs_config* c);
/* Borrowed pointer, or NULL when no [measure] is configured. */
FS_API const fs_measure* fs_config_measure(const fs_config* c);
/* Numeric lists by key: tau, t, tprime, n, grid (lo, hi, count), window, times,
   seed, potential, x_star, mc.replicas, mc.bins, mc.lo, mc.hi, mc.mcmc_steps,
   mc.burn_in. *count is the number of values (0 when unset); at most cap are written. */
FS_API fs_status fs_config_numbers(const fs_config* c, const char* key, double* out, size_t cap,
                                   size_t* count);
/* *present is 0 when no seed is configured. */
FS_API fs_status fs_config_seed(const fs_config* c, uint64_t* seed, int* present);
/* String keys: out, mc.initial. Writes a NUL-terminated copy; *length excludes the NUL. */
FS_API fs_status fs_config_string(const fs_config* c, const char* key, char* buf, size_t cap,
                                  size_t* length);

#ifdef __cplusplus
}
#endif

#endif
