/* Nose-Hoover-under-Brownian-heating sampler: C API.
 *
 * The library core is C++; this header is the stable boundary.  All types
 * are opaque handles, every fallible call returns an nhb_status, and
 * nhb_last_error() yields a thread-local message for the most recent
 * failure on the calling thread.  Strings returned through char** are
 * heap-allocated; release them with nhb_string_free().
 */
#ifndef NHB_H
#define NHB_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum nhb_status {
  NHB_OK = 0,
  NHB_ERR_INVALID_ARGUMENT = 1,
  NHB_ERR_CONFIG = 2,
  NHB_ERR_DOMAIN = 3,
  NHB_ERR_NUMERIC = 4,
  NHB_ERR_INFEASIBLE = 5,
  NHB_ERR_UNREACHABLE = 6,
  NHB_ERR_IO = 7,
  NHB_ERR_INTERNAL = 8
} nhb_status;

const char* nhb_version(void);

/* Message for the most recent failure on this thread ("" if none). */
const char* nhb_last_error(void);

void nhb_string_free(char* s);

/* ---- special functions ------------------------------------------------ */

nhb_status nhb_dawson(double z, double* out);
nhb_status nhb_dawson_max(double* z_star, double* d_max);
nhb_status nhb_f_unit(double z, double* out);
/* beta* = beta/(8 Dmax^2) with beta = 1/(kB T). */
nhb_status nhb_beta_star(double kB, double T, double* out);

/* ---- system parameters ------------------------------------------------ */

typedef struct nhb_params nhb_params;

nhb_status nhb_params_create(int particles, int dim, const double* mass,
                             double gamma, double kB, double T, double a,
                             nhb_params** out);
void nhb_params_destroy(nhb_params* p);

/* ---- potentials -------------------------------------------------------- */

typedef struct nhb_potential nhb_potential;

/* spec_json follows the `potential` object of the run-config schema,
 * e.g. {"type":"double_well","c1":0.25,"c2":0.5,"c3":0.25}. */
nhb_status nhb_potential_create(const char* spec_json, int particles, int dim,
                                double beta, nhb_potential** out);
void nhb_potential_destroy(nhb_potential* pot);

nhb_status nhb_potential_value(const nhb_potential* pot, const double* q,
                               size_t n, double* out);
nhb_status nhb_potential_gradient(const nhb_potential* pot, const double* q,
                                  size_t n, double* grad_out);
nhb_status nhb_potential_in_domain(const nhb_potential* pot, const double* q,
                                   size_t n, int* out);
nhb_status nhb_potential_zeta(const nhb_potential* pot, double* out);

/* ---- energies ---------------------------------------------------------- */

nhb_status nhb_kinetic_energy(const nhb_params* params, const double* p,
                              size_t n, double* out);
nhb_status nhb_hamiltonian(const nhb_potential* pot, const nhb_params* params,
                           const double* q, const double* p, size_t n,
                           double xi, double* out);

/* ---- simulation -------------------------------------------------------- */

typedef struct nhb_trajectory nhb_trajectory;

typedef struct nhb_integrator_opts {
  int use_splitting;    /* 0: Euler-Maruyama, 1: splitting */
  double dt;
  long steps;
  uint64_t seed;
  uint64_t chain;
  long thinning;
  int halve_dt_on_exit; /* 0: reject-and-resample, 1: halve dt */
} nhb_integrator_opts;

nhb_status nhb_simulate(const nhb_potential* pot, const nhb_params* params,
                        const double* q0, const double* p0, size_t n,
                        double xi0, const nhb_integrator_opts* opts,
                        nhb_trajectory** out);
void nhb_trajectory_destroy(nhb_trajectory* traj);

size_t nhb_trajectory_rows(const nhb_trajectory* traj);
size_t nhb_trajectory_dof(const nhb_trajectory* traj);
/* q and p must hold dof doubles each. */
nhb_status nhb_trajectory_row(const nhb_trajectory* traj, size_t row,
                              double* t, double* q, double* p, double* xi);
/* Cumulative audit sums at a stored row: elapsed weight, weighted kinetic
 * norm, weighted arc length, Gaussian draws consumed. */
nhb_status nhb_trajectory_audit(const nhb_trajectory* traj, size_t row,
                                double* sum_w, double* sum_wkin,
                                double* sum_warc, uint64_t* draws);

/* ---- support geometry -------------------------------------------------- */

nhb_status nhb_min_xi(const nhb_potential* pot, const nhb_params* params,
                      const double* q, const double* p, size_t n, double xi,
                      double t, const double* q_target, double* out);
nhb_status nhb_support_member(const nhb_potential* pot,
                              const nhb_params* params, const double* q,
                              const double* p, size_t n, double xi, double t,
                              const double* q2, const double* p2, double xi2,
                              int* out);

/* ---- high-level runners (the CLI surface) ------------------------------ */

typedef struct nhb_run_overrides {
  int has_seed;
  uint64_t seed;
  int chains; /* <= 0: use the config value */
} nhb_run_overrides;

nhb_status nhb_run_simulate(const char* config_json, const char* out_dir,
                            const nhb_run_overrides* overrides,
                            char** summary_json);
nhb_status nhb_run_diagnose(const char* config_json, const char* out_dir,
                            const nhb_run_overrides* overrides,
                            const char* trajectory_file_or_null,
                            char** report_json);
nhb_status nhb_run_drift_check(const char* config_json, const char* out_dir,
                               const nhb_run_overrides* overrides,
                               char** cert_json);
nhb_status nhb_run_control_demo(const char* config_json, const char* out_dir,
                                const nhb_run_overrides* overrides,
                                char** verification_json);
nhb_status nhb_run_specfun(const char* args_json, char** table_json);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* NHB_H */
