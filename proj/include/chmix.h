#ifndef CHMIX_H
#define CHMIX_H

/* C interface to the chmix library. All functions return a chmix_status;
 * on failure chmix_last_error() describes the problem (per thread). Strings
 * returned through handles stay valid until the handle is freed. */

#include <stddef.h>
#include <stdint.h>

#if defined(CHMIX_BUILDING_LIBRARY)
#define CHMIX_API __attribute__((visibility("default")))
#else
#define CHMIX_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum chmix_status {
  CHMIX_OK = 0,
  CHMIX_ERR_CONFIG = 1,
  CHMIX_ERR_NUMERIC = 2,
  CHMIX_ERR_IO = 3,
  CHMIX_ERR_ARGUMENT = 4,
  CHMIX_ERR_INTERNAL = 5
} chmix_status;

typedef struct chmix_config chmix_config;
typedef struct chmix_result chmix_result;

CHMIX_API const char* chmix_version(void);
/* Message of the last failed call on this thread; "" if none. */
CHMIX_API const char* chmix_last_error(void);
CHMIX_API const char* chmix_status_name(chmix_status status);

/* ---- run configuration ---- */

CHMIX_API chmix_status chmix_config_from_text(const char* text, chmix_config** out);
CHMIX_API chmix_status chmix_config_from_file(const char* path, chmix_config** out);
CHMIX_API void chmix_config_free(chmix_config* cfg);

/* Sets section.key = value and revalidates; the config is unchanged on error. */
CHMIX_API chmix_status chmix_config_set(chmix_config* cfg, const char* section, const char* key,
                                        const char* value);
CHMIX_API chmix_status chmix_config_set_kind(chmix_config* cfg, const char* kind);
CHMIX_API chmix_status chmix_config_set_out_dir(chmix_config* cfg, const char* dir);
CHMIX_API chmix_status chmix_config_set_seed(chmix_config* cfg, uint64_t seed);
CHMIX_API chmix_status chmix_config_set_threads(chmix_config* cfg, int threads);
CHMIX_API chmix_status chmix_config_set_snapshot_times(chmix_config* cfg, const double* times,
                                                       size_t count);
CHMIX_API chmix_status chmix_config_kind(const chmix_config* cfg, const char** kind);
/* Effective settings, one "section.key = value" per line. */
CHMIX_API chmix_status chmix_config_echo(const chmix_config* cfg, const char** text);

/* ---- running ---- */

/* Runs the experiment and writes its artifacts. On failure the output
 * directory holds a FAILED marker and *out is left NULL. */
CHMIX_API chmix_status chmix_run(const chmix_config* cfg, chmix_result** out);
CHMIX_API void chmix_result_free(chmix_result* res);
CHMIX_API chmix_status chmix_result_summary(const chmix_result* res, const char** text);
CHMIX_API chmix_status chmix_result_manifest(const chmix_result* res, const char** text);
CHMIX_API chmix_status chmix_result_get(const chmix_result* res, const char* key,
                                        const char** value);
CHMIX_API size_t chmix_result_count(const chmix_result* res);
CHMIX_API chmix_status chmix_result_entry(const chmix_result* res, size_t index, const char** key,
                                          const char** value);

/* ---- calculators ---- */

typedef struct chmix_threshold_inputs {
  double B;
  double cbar;
  double beta;
  double mu;
  double gamma;
  double C_beta_mu;
  double grad_u_sup;
  int dim;
} chmix_threshold_inputs;

CHMIX_API void chmix_threshold_inputs_default(chmix_threshold_inputs* in);
CHMIX_API chmix_status chmix_threshold_T0(const chmix_threshold_inputs* in, double* prime,
                                          double* value);
CHMIX_API chmix_status chmix_threshold_T1(const chmix_threshold_inputs* in, double* prime,
                                          double* value);
CHMIX_API chmix_status chmix_lower_bound_tau2(double c2_norm, double gamma, double C_dim,
                                              double* out);
CHMIX_API chmix_status chmix_hypothesis_check(const chmix_threshold_inputs* in, double tau2,
                                              int estimate_dim, int* applies, double* margin);

CHMIX_API chmix_status chmix_flow_free_dissipation_time(int alpha, double gamma, double* out);
/* Dissipation time for the [linear], [grid] and [flow] settings of cfg. */
CHMIX_API chmix_status chmix_dissipation_time(const chmix_config* cfg, double* tau_star,
                                              double* t_lo, double* t_hi);

typedef enum chmix_rate_kind { CHMIX_RATE_WEAK = 0, CHMIX_RATE_STRONG = 1 } chmix_rate_kind;
typedef double (*chmix_rate_fn)(double t, void* user);

CHMIX_API chmix_status chmix_t_star(chmix_rate_fn h, void* user, chmix_rate_kind kind,
                                    double gamma, double c2_norm, int dim, double C1, double C2,
                                    double* t_star, double* residual);
/* h(t) = a e^{-b t} (power = 0) or a t^{-b} (power = 1). */
CHMIX_API chmix_status chmix_t_star_fit(int power, double a, double b, chmix_rate_kind kind,
                                        double gamma, double c2_norm, int dim, double C1,
                                        double C2, double* t_star, double* residual);

/* Reads a snapshot. Call with values = NULL to get *count; then again with
 * capacity >= *count. */
CHMIX_API chmix_status chmix_snapshot_read(const char* path, int* dim, int* n, double* t,
                                           double* values, size_t capacity, size_t* count);

#ifdef __cplusplus
}
#endif

#endif
