#pragma once

/* C interface to the DRCUT library: simulation of illness-death cohorts,
 * nuisance estimation, doubly robust pseudo-outcome transforms, cross-fitted
 * local-linear regression, fuzzy discontinuity estimation, and the
 * replication experiment harness.
 *
 * Conventions:
 *   - Every fallible function returns a drcut_status; DRCUT_OK is 0. On
 *     failure, drcut_last_error() returns a thread-local message describing
 *     what went wrong, and all output parameters are left untouched.
 *   - Objects are opaque handles created by drcut_* constructors and released
 *     by the matching drcut_*_free; freeing NULL is a no-op. Handles are
 *     immutable after creation and may be shared across threads.
 *   - Structured results come back as JSON in a heap-allocated string owned
 *     by the caller; release it with drcut_string_free. Optional JSON inputs
 *     accept NULL for defaults; unknown keys are rejected.
 */

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum drcut_status {
    DRCUT_OK = 0,
    DRCUT_ERR_INVALID_ARGUMENT = 1, /* precondition violated */
    DRCUT_ERR_PARSE = 2,            /* malformed config/CSV/JSON */
    DRCUT_ERR_NUMERIC = 3,          /* numerical failure */
    DRCUT_ERR_CONVERGENCE = 4,      /* iterative fit hit its cap */
    DRCUT_ERR_IO = 5,               /* file system failure */
    DRCUT_ERR_UNKNOWN = 6
} drcut_status;

typedef struct drcut_scenario drcut_scenario;       /* data-generating scenario */
typedef struct drcut_cohort drcut_cohort;           /* observed subjects */
typedef struct drcut_hazard drcut_hazard;           /* a single hazard model */
typedef struct drcut_transitions drcut_transitions; /* {m12, m13, m23} bundle */
typedef struct drcut_tables drcut_tables;           /* conditional-mean tables */
typedef struct drcut_pseudo drcut_pseudo;           /* pseudo-outcome sample */

/* Library version string, e.g. "0.1.0". Static storage; do not free. */
const char* drcut_version(void);

/* Message for the most recent failure on this thread ("" if none). The
 * pointer stays valid until the next failing drcut_* call on the thread. */
const char* drcut_last_error(void);

/* Release a string returned through a char** output parameter. */
void drcut_string_free(char* s);

/* ------------------------------------------------------------- scenario -- */

/* The built-in simulation scenario (horizon 5, W uniform on [-4, 4]). */
drcut_status drcut_scenario_default(drcut_scenario** out);

/* Parse a scenario from a nested key-value config file / string. */
drcut_status drcut_scenario_load(const char* path, drcut_scenario** out);
drcut_status drcut_scenario_parse(const char* text, drcut_scenario** out);

/* Render the scenario back to config text (round-trips through parse). */
drcut_status drcut_scenario_to_text(const drcut_scenario* scen, char** out);

double drcut_scenario_eta(const drcut_scenario* scen);

/* Covariate range [w_lo, w_hi]; either output may be NULL. */
drcut_status drcut_scenario_w_range(const drcut_scenario* scen, double* w_lo,
                                    double* w_hi);

void drcut_scenario_free(drcut_scenario* scen);

/* --------------------------------------------------------------- cohort -- */

/* Simulate n subjects and apply the observation map. Subject i is driven by
 * the stream (seed, i), so the result is independent of workers. workers = 0
 * means one per hardware thread. */
drcut_status drcut_simulate(const drcut_scenario* scen, long n, uint64_t seed,
                            int workers, drcut_cohort** out);

/* Long-format event CSV: id,w,time,event,state[,treatment]. Reading needs
 * the horizon eta to validate uncensored paths. */
drcut_status drcut_cohort_write_csv(const drcut_cohort* cohort, const char* path);
drcut_status drcut_cohort_read_csv(const char* path, double eta, drcut_cohort** out);

long drcut_cohort_size(const drcut_cohort* cohort);

void drcut_cohort_free(drcut_cohort* cohort);

/* ------------------------------------------------------------- nuisances -- */

/* The scenario's true censoring hazard / transition hazards. */
drcut_status drcut_oracle_censoring(const drcut_scenario* scen, drcut_hazard** out);
drcut_status drcut_oracle_transitions(const drcut_scenario* scen,
                                      drcut_transitions** out);

/* hal_json configures the penalized piecewise-exponential fits; NULL for
 * defaults. Keys (all optional): knots_per_margin, max_order, n_lambda,
 * lambda_min_ratio, cv_folds, tol, max_sweeps, workers.
 *
 * If info_json is non-NULL it receives {"lambda", "nonzero", "lambda_path",
 * "cv_loss"} for the chosen fit. */
drcut_status drcut_fit_censoring_hal(const drcut_cohort* cohort, const char* hal_json,
                                     drcut_hazard** out, char** info_json);

/* Censoring hazard exp(b0 + b1 t + b2 w) by maximum likelihood (the
 * covariate-coarse parametric model). info_json (optional) receives
 * {"b0","b1","b2","iterations","loglik"}. */
drcut_status drcut_fit_censoring_parametric(const drcut_cohort* cohort, double eta,
                                            drcut_hazard** out, char** info_json);

/* All three transition hazards with the penalized spline model. */
drcut_status drcut_fit_transitions_hal(const drcut_cohort* cohort, const char* hal_json,
                                       int workers, drcut_transitions** out);

/* Hazard evaluation: raw rate at calendar time t for a spell entered at
 * `entry` and covariate w (NaN if hazard is NULL). */
double drcut_hazard_rate(const drcut_hazard* hazard, double t, double entry, double w);

/* JSON persistence for fitted or oracle hazards. */
drcut_status drcut_hazard_save(const drcut_hazard* hazard, const char* path);
drcut_status drcut_hazard_load(const char* path, drcut_hazard** out);
drcut_status drcut_transitions_save(const drcut_transitions* trans, const char* path);
drcut_status drcut_transitions_load(const char* path, drcut_transitions** out);

void drcut_hazard_free(drcut_hazard* hazard);
void drcut_transitions_free(drcut_transitions* trans);

/* ----------------------------------------------------------- value tables -- */

/* Solve the backward value equations for the transition bundle. grid_json
 * keys (all optional): eta, t_step, s_step, store_stride, w_lo, w_hi, w_step.
 * extra_w (n_extra points, may be NULL) adds exact covariate knots. */
drcut_status drcut_tables_build(const drcut_transitions* trans, const char* grid_json,
                                const double* extra_w, size_t n_extra, int workers,
                                drcut_tables** out);

/* Truth tables for a scenario: oracle transitions solved on a grid whose
 * eta and covariate range default to the scenario's. */
drcut_status drcut_tables_oracle(const drcut_scenario* scen, const char* grid_json,
                                 const double* extra_w, size_t n_extra, int workers,
                                 drcut_tables** out);

/* Expected future illness time given healthy at t / ill at t since s.
 * NaN if tables is NULL. */
double drcut_tables_v1(const drcut_tables* tables, double t, double w);
double drcut_tables_v2(const drcut_tables* tables, double t, double s, double w);

drcut_status drcut_tables_save(const drcut_tables* tables, const char* path);
drcut_status drcut_tables_load(const char* path, drcut_tables** out);

/* Gridded V1 slice as CSV plot data (w,t,v1). */
drcut_status drcut_tables_export_csv(const drcut_tables* tables, const char* path);

void drcut_tables_free(drcut_tables* tables);

/* -------------------------------------------------------- pseudo-outcomes -- */

/* Censoring-unbiased transform of a cohort. `cens` is the censoring hazard,
 * epsilon the positivity floor on its survival. `outcome` supplies the
 * conditional means and may be NULL for the ipcw variant only.
 *
 * options_json keys (all optional): variant ("ipcw", "dr", "oracle-dr",
 * "causal"), quad_step, censoring_kind, outcome_kind (provenance labels
 * stamped on the rows), eta (ipcw without tables), arm, propensity (causal),
 * workers. */
drcut_status drcut_transform(const drcut_cohort* cohort, const drcut_hazard* cens,
                             double epsilon, const drcut_tables* outcome,
                             const char* options_json, drcut_pseudo** out);

/* Pseudo-outcome CSV: id,w,variant,value,censoring_kind,outcome_kind. */
drcut_status drcut_pseudo_write_csv(const drcut_pseudo* pseudo, const char* path);
drcut_status drcut_pseudo_read_csv(const char* path, drcut_pseudo** out);

long drcut_pseudo_size(const drcut_pseudo* pseudo);

void drcut_pseudo_free(drcut_pseudo* pseudo);

/* ------------------------------------------------------------- regression -- */

/* Undersmoothing bandwidth rule h = c * n^(-1/4.5). */
double drcut_bandwidth_rule(double n, double c);

/* Local-linear regression of the pseudo-outcomes on the grid. kernel is
 * "epanechnikov" or "triangular" (NULL for the former). curve_json receives
 * [{"w","estimate","se"}, ...]. */
drcut_status drcut_regress(const drcut_pseudo* pseudo, const double* grid,
                           size_t n_grid, double h, const char* kernel,
                           char** curve_json);

/* Write a curve (JSON as produced by drcut_regress or drcut_crossfit_curve)
 * as CSV w,estimate,se,ci_lo,ci_hi with symmetric normal bands at `level`. */
drcut_status drcut_curve_write_csv(const char* curve_json, double level,
                                   const char* path);

/* -------------------------------------------------------------- crossfit -- */

/* pipeline_json configures nuisance fitting + transform + regression. Keys
 * (all optional): variant; cens ("oracle", "hal", "parametric", "zero");
 * outcome ("oracle", "hal", "constant", "zero"); epsilon; quad_step;
 * bandwidth_c; kernel; workers; hal.* (as in drcut_fit_censoring_hal);
 * table.t_step, table.s_step, table.store_stride, table.w_step. */

/* K-fold cross-fit at one point: per fold, nuisances on the complement and a
 * local-linear fit at w0 on the fold. result_json receives {"w0","k",
 * "cf_estimate","cf_se","folds":[{"estimate","se","n"}, ...]}. */
drcut_status drcut_crossfit_point(const drcut_cohort* cohort, const drcut_scenario* scen,
                                  const char* pipeline_json, double w0, int k,
                                  uint64_t fold_seed, char** result_json);

/* Cross-fitted curve on a grid; k = 1 fits nuisances and regresses on the
 * full data (the oracle-pipeline convention). Same JSON shape as
 * drcut_regress. */
drcut_status drcut_crossfit_curve(const drcut_cohort* cohort, const drcut_scenario* scen,
                                  const char* pipeline_json, const double* grid,
                                  size_t n_grid, int k, uint64_t fold_seed,
                                  char** curve_json);

/* ------------------------------------------------------------------- rdd -- */

/* options_json keys (all optional): w0, h, kernel, denom_floor,
 * boundary_on_right. The two samples must pair up by subject id. */

/* Fuzzy discontinuity estimate tau = (y+ - y-) / (a+ - a-) with a
 * delta-method SE. result_json receives {"tau","se","w0","h","n_left",
 * "n_right","y_plus":{"estimate","se","n"}, ..., "cov_plus","cov_minus"}. */
drcut_status drcut_fuzzy_rdd(const drcut_pseudo* pseudo_y, const drcut_pseudo* pseudo_a,
                             const char* options_json, char** result_json);

/* One fit per bandwidth in h_list; per-bandwidth failures are recorded in
 * the row, not fatal. rows_json receives [{"h","ok","error",result...}]. */
drcut_status drcut_rdd_sensitivity(const drcut_pseudo* pseudo_y,
                                   const drcut_pseudo* pseudo_a,
                                   const char* options_json, const double* h_list,
                                   size_t n_h, char** rows_json);

/* Mean pseudo-outcome per covariate bin; plot data for discontinuity
 * displays. json receives [{"center","mean","count"}, ...]. */
drcut_status drcut_binned_means(const drcut_pseudo* pseudo, double lo, double hi,
                                double width, char** json);

/* ------------------------------------------------------------ experiment -- */

/* Run the replication study described by a config file (scenario, n list,
 * replications, estimator menu, grid, seeds). Writes curves.csv, l2.csv,
 * coverage.csv, replications.json and summary.json under out_dir (pass NULL
 * or "" to skip the files). workers_override >= 0 replaces the config's
 * worker count. summary_json (optional) receives the summary document. */
drcut_status drcut_run_experiment(const char* config_path, const char* out_dir,
                                  int workers_override, char** summary_json);

/* -------------------------------------------------------------- diagnose -- */

/* Monte Carlo estimate of the conditional bias at W = w of the transform
 * built from (cens1, outcome2), using `truth` for the true conditional
 * means. json receives {"mean","se","n"}. Zero within error when either
 * nuisance is exact. */
drcut_status drcut_bias_diagnostic(const drcut_scenario* scen, double w,
                                   const drcut_hazard* cens1, double epsilon,
                                   const drcut_tables* outcome2,
                                   const drcut_tables* truth, size_t n_mc,
                                   uint64_t seed, double quad_step, int workers,
                                   char** json);

/* Weighted-empirical error norms of fitted nuisances against the truth,
 * weighted by the local-linear smoother weights at w0 with bandwidth h on
 * the cohort's covariates. `outcome` may be NULL (reports outcome_norm 0).
 * json receives {"outcome_norm","hazard_norm","weight_sum_abs"}. */
drcut_status drcut_nuisance_norms(const drcut_cohort* cohort, const drcut_scenario* scen,
                                  const drcut_hazard* cens, double epsilon,
                                  const drcut_tables* outcome, const drcut_tables* truth,
                                  double w0, double h, size_t paths_per_point,
                                  uint64_t seed, int workers, char** json);

#ifdef __cplusplus
} /* extern "C" */
#endif
