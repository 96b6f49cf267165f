/* C interface to the tailstab library. All functions return a ts_status;
 * on failure ts_last_error() describes the problem (thread-local). */
#ifndef TAILSTAB_H
#define TAILSTAB_H

#include <stddef.h>
#include <stdint.h>

#if defined(TAILSTAB_BUILDING_LIBRARY)
#define TAILSTAB_API __attribute__((visibility("default")))
#else
#define TAILSTAB_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ts_status {
    TS_OK = 0,
    TS_ERR_INVALID_ARGUMENT = 1,
    TS_ERR_INSUFFICIENT_DATA = 2,
    TS_ERR_UNSUPPORTED = 3,
    TS_ERR_IO = 4,
    TS_ERR_CONFIG = 5,
    TS_ERR_NUMERICAL = 6,
    TS_ERR_INTERNAL = 7
} ts_status;

typedef enum ts_side { TS_SIDE_RIGHT = 0, TS_SIDE_LEFT = 1, TS_SIDE_ABS = 2 } ts_side;

typedef struct ts_law ts_law;
typedef struct ts_process ts_process;
typedef struct ts_coupled ts_coupled;
typedef struct ts_theta ts_theta;

TAILSTAB_API const char* ts_version(void);
TAILSTAB_API const char* ts_last_error(void);
TAILSTAB_API const char* ts_status_string(ts_status status);

/* Laws. family: pareto, two_sided_pareto, frechet, student_t, symmetric_stable. */
TAILSTAB_API ts_status ts_law_create(const char* family, double nu, double p, double scale, ts_law** out);
TAILSTAB_API void ts_law_destroy(ts_law* law);
TAILSTAB_API ts_status ts_law_survival(const ts_law* law, double x, ts_side side, double* out);
TAILSTAB_API ts_status ts_law_quantile(const ts_law* law, double u, double* out);
TAILSTAB_API ts_status ts_law_tail_constant(const ts_law* law, double* out);
TAILSTAB_API ts_status ts_law_truncated_moment(const ts_law* law, double beta, double z, double* out);
/* Writes n draws; output is identical for every thread count. */
TAILSTAB_API ts_status ts_law_sample(const ts_law* law, size_t n, uint64_t seed, uint64_t stream_id,
                                     unsigned threads, double* out);

/* Processes, from the "process" block of the experiment config (JSON text). */
TAILSTAB_API ts_status ts_process_from_json(const char* json, ts_process** out);
TAILSTAB_API void ts_process_destroy(ts_process* process);
TAILSTAB_API ts_status ts_process_truncation(const ts_process* process, size_t* out);
/* Copies up to capacity coefficients; *length receives M + 1. */
TAILSTAB_API ts_status ts_process_coefficients(const ts_process* process, double* out, size_t capacity,
                                               size_t* length);
TAILSTAB_API ts_status ts_simulate_path(const ts_process* process, size_t n, uint64_t seed, unsigned threads,
                                        double* out);

TAILSTAB_API ts_status ts_simulate_coupled(const ts_process* process, const size_t* lags, size_t n_lags,
                                           size_t reps, uint64_t seed, unsigned threads, ts_coupled** out);
TAILSTAB_API void ts_coupled_destroy(ts_coupled* draws);
TAILSTAB_API ts_status ts_coupled_reps(const ts_coupled* draws, size_t* out);
/* x and x_star must each hold reps values. */
TAILSTAB_API ts_status ts_coupled_pairs(const ts_coupled* draws, size_t lag_index, double* x, double* x_star);

TAILSTAB_API ts_status ts_theta_estimate(const ts_coupled* draws, double y, size_t grid_size, size_t min_exceed,
                                         unsigned threads, ts_theta** out);
TAILSTAB_API void ts_theta_destroy(ts_theta* est);
TAILSTAB_API ts_status ts_theta_count(const ts_theta* est, size_t* out);
TAILSTAB_API ts_status ts_theta_row(const ts_theta* est, size_t index, size_t* lag, double* theta_hat,
                                    double* upper_conf, double* se, size_t* n_exceed_at_y);
TAILSTAB_API ts_status ts_theta_sum(const ts_theta* est, double q, double* out);

/* Pure functions. */
TAILSTAB_API ts_status ts_sufficiency_exponent(double nu, double q, double eps, int symmetric_stable, double* out);
TAILSTAB_API ts_status ts_hill_estimate(const double* sample, size_t n, size_t k, double* nu, double* se);
/* design is row-major n x p, or NULL for the intercept-only fit (p ignored, one coefficient). */
TAILSTAB_API ts_status ts_high_quantile(const double* responses, size_t n, const double* design, size_t p,
                                        double alpha, double* beta_out);

/* Runs a configured experiment and writes its outputs. seed_override and mode may be NULL;
 * mode is one of tas, tailstats, verify, full. *exit_code receives 0 (all checks passed)
 * or 2 (a check failed). */
TAILSTAB_API ts_status ts_run_experiment(const char* config_path, const char* out_dir, const uint64_t* seed_override,
                                         const char* mode, unsigned threads, int* exit_code);

#ifdef __cplusplus
}
#endif

#endif
