#include "nhb/nhb.h"

#include <cstring>
#include <string>

#include "nhb/config.hpp"
#include "nhb/control.hpp"
#include "nhb/dynamics.hpp"
#include "nhb/errors.hpp"
#include "nhb/model.hpp"
#include "nhb/runners.hpp"
#include "nhb/specfun.hpp"

namespace {

thread_local std::string g_last_error;

void set_error(const std::string& msg) { g_last_error = msg; }

nhb_status status_of(const std::exception& e) {
  if (dynamic_cast<const nhb::ConfigError*>(&e)) return NHB_ERR_CONFIG;
  if (dynamic_cast<const nhb::DomainError*>(&e)) return NHB_ERR_DOMAIN;
  if (dynamic_cast<const nhb::ContractViolation*>(&e))
    return NHB_ERR_INVALID_ARGUMENT;
  if (dynamic_cast<const nhb::InfeasibleError*>(&e)) return NHB_ERR_INFEASIBLE;
  if (dynamic_cast<const nhb::UnreachableEstimateError*>(&e))
    return NHB_ERR_UNREACHABLE;
  if (dynamic_cast<const nhb::NumericError*>(&e)) return NHB_ERR_NUMERIC;
  if (dynamic_cast<const nhb::Error*>(&e)) return NHB_ERR_IO;
  if (dynamic_cast<const std::invalid_argument*>(&e))
    return NHB_ERR_INVALID_ARGUMENT;
  return NHB_ERR_INTERNAL;
}

template <typename Fn>
nhb_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return NHB_OK;
  } catch (const std::exception& e) {
    set_error(e.what());
    return status_of(e);
  } catch (...) {
    set_error("unknown error");
    return NHB_ERR_INTERNAL;
  }
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

nhb_status require(bool ok, const char* msg) {
  if (ok) return NHB_OK;
  set_error(msg);
  return NHB_ERR_INVALID_ARGUMENT;
}

Eigen::VectorXd to_vec(const double* data, size_t n) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(n));
  for (size_t i = 0; i < n; ++i) v[static_cast<Eigen::Index>(i)] = data[i];
  return v;
}

nhb::RunOverrides to_overrides(const nhb_run_overrides* ov) {
  nhb::RunOverrides out;
  if (ov) {
    if (ov->has_seed) out.seed = ov->seed;
    if (ov->chains > 0) out.chains = ov->chains;
  }
  return out;
}

}  // namespace

struct nhb_params {
  nhb::SystemParams value;
};

struct nhb_potential {
  nhb::PotentialHandle value;
};

struct nhb_trajectory {
  nhb::Trajectory value;
};

extern "C" {

const char* nhb_version(void) { return nhb::library_version(); }

const char* nhb_last_error(void) { return g_last_error.c_str(); }

void nhb_string_free(char* s) { delete[] s; }

nhb_status nhb_dawson(double z, double* out) {
  if (nhb_status s = require(out != nullptr, "dawson: null output"); s) return s;
  return guarded([&] { *out = nhb::specfun::dawson(z); });
}

nhb_status nhb_dawson_max(double* z_star, double* d_max) {
  if (nhb_status s = require(z_star && d_max, "dawson_max: null output"); s)
    return s;
  return guarded([&] {
    const auto dm = nhb::specfun::dawson_max();
    *z_star = dm.z_star;
    *d_max = dm.d_max;
  });
}

nhb_status nhb_f_unit(double z, double* out) {
  if (nhb_status s = require(out != nullptr, "f_unit: null output"); s) return s;
  return guarded([&] { *out = nhb::specfun::f_unit(z); });
}

nhb_status nhb_beta_star(double kB, double T, double* out) {
  if (nhb_status s = require(out != nullptr, "beta_star: null output"); s)
    return s;
  return guarded([&] {
    if (!(kB > 0.0 && T > 0.0))
      throw nhb::ContractViolation("beta_star: kB and T must be positive");
    *out = nhb::specfun::beta_star_of(1.0 / (kB * T));
  });
}

nhb_status nhb_params_create(int particles, int dim, const double* mass,
                             double gamma, double kB, double T, double a,
                             nhb_params** out) {
  if (nhb_status s = require(out && mass, "params_create: null argument"); s)
    return s;
  return guarded([&] {
    Eigen::VectorXd m = to_vec(mass, static_cast<size_t>(particles > 0 ? particles : 0));
    *out = new nhb_params{nhb::SystemParams(particles, dim, std::move(m),
                                            gamma, kB, T, a)};
  });
}

void nhb_params_destroy(nhb_params* p) { delete p; }

nhb_status nhb_potential_create(const char* spec_json, int particles, int dim,
                                double beta, nhb_potential** out) {
  if (nhb_status s = require(spec_json && out, "potential_create: null argument"); s)
    return s;
  return guarded([&] {
    const auto spec = nlohmann::json::parse(std::string(spec_json), nullptr, false);
    if (spec.is_discarded())
      throw nhb::ConfigError("potential_create: spec is not valid JSON");
    *out = new nhb_potential{
        nhb::potential_from_spec(spec, particles, dim, beta)};
  });
}

void nhb_potential_destroy(nhb_potential* pot) { delete pot; }

nhb_status nhb_potential_value(const nhb_potential* pot, const double* q,
                               size_t n, double* out) {
  if (nhb_status s = require(pot && q && out, "potential_value: null argument"); s)
    return s;
  return guarded([&] { *out = pot->value->value(to_vec(q, n)); });
}

nhb_status nhb_potential_gradient(const nhb_potential* pot, const double* q,
                                  size_t n, double* grad_out) {
  if (nhb_status s = require(pot && q && grad_out, "potential_gradient: null argument"); s)
    return s;
  return guarded([&] {
    const Eigen::VectorXd g = pot->value->gradient(to_vec(q, n));
    for (Eigen::Index i = 0; i < g.size(); ++i) grad_out[i] = g[i];
  });
}

nhb_status nhb_potential_in_domain(const nhb_potential* pot, const double* q,
                                   size_t n, int* out) {
  if (nhb_status s = require(pot && q && out, "potential_in_domain: null argument"); s)
    return s;
  return guarded([&] { *out = pot->value->in_domain(to_vec(q, n)) ? 1 : 0; });
}

nhb_status nhb_potential_zeta(const nhb_potential* pot, double* out) {
  if (nhb_status s = require(pot && out, "potential_zeta: null argument"); s)
    return s;
  *out = pot->value->zeta();
  return NHB_OK;
}

nhb_status nhb_kinetic_energy(const nhb_params* params, const double* p,
                              size_t n, double* out) {
  if (nhb_status s = require(params && p && out, "kinetic_energy: null argument"); s)
    return s;
  return guarded([&] {
    *out = nhb::kinetic_energy(to_vec(p, n), params->value);
  });
}

nhb_status nhb_hamiltonian(const nhb_potential* pot, const nhb_params* params,
                           const double* q, const double* p, size_t n,
                           double xi, double* out) {
  if (nhb_status s = require(pot && params && q && p && out, "hamiltonian: null argument"); s)
    return s;
  return guarded([&] {
    nhb::State x{to_vec(q, n), to_vec(p, n), xi};
    *out = nhb::hamiltonian(x, *pot->value, params->value);
  });
}

nhb_status nhb_simulate(const nhb_potential* pot, const nhb_params* params,
                        const double* q0, const double* p0, size_t n,
                        double xi0, const nhb_integrator_opts* opts,
                        nhb_trajectory** out) {
  if (nhb_status s = require(pot && params && q0 && p0 && opts && out,
                             "simulate: null argument"); s)
    return s;
  return guarded([&] {
    nhb::IntegratorConfig config;
    config.scheme = opts->use_splitting ? nhb::Scheme::Splitting
                                        : nhb::Scheme::EulerMaruyama;
    config.dt = opts->dt;
    config.n_steps = opts->steps;
    config.seed = opts->seed;
    config.thinning = opts->thinning > 0 ? opts->thinning : 1;
    config.boundary_policy = opts->halve_dt_on_exit
                                 ? nhb::BoundaryPolicy::HalveDt
                                 : nhb::BoundaryPolicy::RejectStep;
    nhb::State x0{to_vec(q0, n), to_vec(p0, n), xi0};
    *out = new nhb_trajectory{nhb::simulate(x0, config, *pot->value,
                                            params->value, opts->chain)};
  });
}

void nhb_trajectory_destroy(nhb_trajectory* traj) { delete traj; }

size_t nhb_trajectory_rows(const nhb_trajectory* traj) {
  return traj ? traj->value.size() : 0;
}

size_t nhb_trajectory_dof(const nhb_trajectory* traj) {
  if (!traj || traj->value.states.empty()) return 0;
  return static_cast<size_t>(traj->value.states[0].q.size());
}

nhb_status nhb_trajectory_row(const nhb_trajectory* traj, size_t row,
                              double* t, double* q, double* p, double* xi) {
  if (nhb_status s = require(traj && t && q && p && xi, "trajectory_row: null argument"); s)
    return s;
  if (row >= traj->value.size())
    return require(false, "trajectory_row: row out of range");
  const nhb::State& x = traj->value.states[row];
  *t = traj->value.times[row];
  for (Eigen::Index i = 0; i < x.q.size(); ++i) q[i] = x.q[i];
  for (Eigen::Index i = 0; i < x.p.size(); ++i) p[i] = x.p[i];
  *xi = x.xi;
  return NHB_OK;
}

nhb_status nhb_trajectory_audit(const nhb_trajectory* traj, size_t row,
                                double* sum_w, double* sum_wkin,
                                double* sum_warc, uint64_t* draws) {
  if (nhb_status s = require(traj && sum_w && sum_wkin && sum_warc && draws,
                             "trajectory_audit: null argument"); s)
    return s;
  if (row >= traj->value.size())
    return require(false, "trajectory_audit: row out of range");
  *sum_w = traj->value.sum_w[row];
  *sum_wkin = traj->value.sum_wkin[row];
  *sum_warc = traj->value.sum_warc[row];
  *draws = traj->value.brownian_increments_consumed[row];
  return NHB_OK;
}

nhb_status nhb_min_xi(const nhb_potential* pot, const nhb_params* params,
                      const double* q, const double* p, size_t n, double xi,
                      double t, const double* q_target, double* out) {
  if (nhb_status s = require(pot && params && q && p && q_target && out,
                             "min_xi: null argument"); s)
    return s;
  return guarded([&] {
    nhb::State x{to_vec(q, n), to_vec(p, n), xi};
    *out = nhb::min_xi(x, t, to_vec(q_target, n), params->value, *pot->value);
  });
}

nhb_status nhb_support_member(const nhb_potential* pot,
                              const nhb_params* params, const double* q,
                              const double* p, size_t n, double xi, double t,
                              const double* q2, const double* p2, double xi2,
                              int* out) {
  if (nhb_status s = require(pot && params && q && p && q2 && p2 && out,
                             "support_member: null argument"); s)
    return s;
  return guarded([&] {
    nhb::SupportQuery query;
    query.origin = {to_vec(q, n), to_vec(p, n), xi};
    query.horizon = t;
    query.target = {to_vec(q2, n), to_vec(p2, n), xi2};
    *out = nhb::support_member(query, *pot->value, params->value) ? 1 : 0;
  });
}

nhb_status nhb_run_simulate(const char* config_json, const char* out_dir,
                            const nhb_run_overrides* overrides,
                            char** summary_json) {
  if (nhb_status s = require(config_json && out_dir && summary_json,
                             "run_simulate: null argument"); s)
    return s;
  return guarded([&] {
    *summary_json = dup_string(
        nhb::run_simulate(config_json, out_dir, to_overrides(overrides)));
  });
}

nhb_status nhb_run_diagnose(const char* config_json, const char* out_dir,
                            const nhb_run_overrides* overrides,
                            const char* trajectory_file_or_null,
                            char** report_json) {
  if (nhb_status s = require(config_json && out_dir && report_json,
                             "run_diagnose: null argument"); s)
    return s;
  return guarded([&] {
    *report_json = dup_string(nhb::run_diagnose(
        config_json, out_dir, to_overrides(overrides),
        trajectory_file_or_null ? trajectory_file_or_null : ""));
  });
}

nhb_status nhb_run_drift_check(const char* config_json, const char* out_dir,
                               const nhb_run_overrides* overrides,
                               char** cert_json) {
  if (nhb_status s = require(config_json && out_dir && cert_json,
                             "run_drift_check: null argument"); s)
    return s;
  return guarded([&] {
    *cert_json = dup_string(
        nhb::run_drift_check(config_json, out_dir, to_overrides(overrides)));
  });
}

nhb_status nhb_run_control_demo(const char* config_json, const char* out_dir,
                                const nhb_run_overrides* overrides,
                                char** verification_json) {
  if (nhb_status s = require(config_json && out_dir && verification_json,
                             "run_control_demo: null argument"); s)
    return s;
  return guarded([&] {
    *verification_json = dup_string(
        nhb::run_control_demo(config_json, out_dir, to_overrides(overrides)));
  });
}

nhb_status nhb_run_specfun(const char* args_json, char** table_json) {
  if (nhb_status s = require(table_json != nullptr, "run_specfun: null output"); s)
    return s;
  return guarded([&] {
    *table_json = dup_string(nhb::run_specfun(args_json ? args_json : "{}"));
  });
}

}  // extern "C"
