#include "nhb/runners.hpp"

#include <cmath>
#include <filesystem>

#include <nlohmann/json.hpp>

#include "nhb/config.hpp"
#include "nhb/control.hpp"
#include "nhb/diagnostics.hpp"
#include "nhb/io.hpp"
#include "nhb/lyapunov.hpp"
#include "nhb/numerics.hpp"
#include "nhb/rng.hpp"
#include "nhb/specfun.hpp"

namespace nhb {

namespace {

using nlohmann::json;

struct RunSetup {
  RunConfig cfg;
  PotentialHandle pot;
  std::uint64_t seed;
  int chains;
};

RunSetup prepare(const std::string& config_text, const RunOverrides& ov) {
  RunSetup setup{parse_config(config_text), nullptr, 0, 1};
  setup.pot = setup.cfg.make_potential();
  setup.seed = ov.seed.value_or(setup.cfg.integrator.seed);
  setup.chains = ov.chains.value_or(setup.cfg.chains);
  if (setup.chains < 1) throw ConfigError("config: chains must be >= 1");
  return setup;
}

std::string ensure_dir(const std::string& out_dir) {
  namespace fs = std::filesystem;
  if (out_dir.empty()) throw ConfigError("output directory not given");
  fs::create_directories(out_dir);
  return out_dir;
}

void write_manifest(const std::string& out_dir, const std::string& subcommand,
                    const RunSetup& setup, const json& outputs) {
  json manifest;
  manifest["schema"] = "nhb-run-manifest-v1";
  manifest["subcommand"] = subcommand;
  manifest["config_hash"] = fnv1a64_hex(setup.cfg.canonical());
  manifest["seed"] = setup.seed;
  manifest["chains"] = setup.chains;
  manifest["library_version"] = library_version();
  manifest["outputs"] = outputs;
  write_text_file(out_dir + "/manifest.json", manifest.dump(2) + "\n");
}

std::string trajectory_filename(int chain, int chains, OutputFormat format) {
  const char* ext = (format == OutputFormat::Csv) ? ".csv" : ".bin";
  if (chains == 1) return std::string("trajectory") + ext;
  return "trajectory_chain" + std::to_string(chain) + ext;
}

Trajectory drop_burn_in(const Trajectory& traj, double fraction) {
  if (fraction <= 0.0 || traj.states.size() < 3) return traj;
  const std::size_t skip =
      static_cast<std::size_t>(fraction * traj.states.size());
  if (skip + 2 >= traj.states.size()) return traj;
  Trajectory out;
  out.dt = traj.dt;
  out.scheme = traj.scheme;
  out.total_steps = traj.total_steps;
  for (std::size_t i = skip; i < traj.states.size(); ++i) {
    out.times.push_back(traj.times[i]);
    out.states.push_back(traj.states[i]);
    out.sum_w.push_back(traj.sum_w[i]);
    out.sum_wkin.push_back(traj.sum_wkin[i]);
    out.sum_warc.push_back(traj.sum_warc[i]);
    out.brownian_increments_consumed.push_back(
        traj.brownian_increments_consumed[i]);
  }
  return out;
}

}  // namespace

std::string run_simulate(const std::string& config_text,
                         const std::string& out_dir,
                         const RunOverrides& overrides) {
  RunSetup setup = prepare(config_text, overrides);
  ensure_dir(out_dir);
  IntegratorConfig integ = setup.cfg.integrator;
  integ.seed = setup.seed;

  json outputs = json::array();
  json chains_summary = json::array();
  std::vector<State> x0s(setup.chains, setup.cfg.initial_state);
  const auto results = ensemble_run(x0s, integ, *setup.pot, setup.cfg.system);
  int failures = 0;
  for (int c = 0; c < setup.chains; ++c) {
    const auto& res = results[c];
    if (!res.trajectory) {
      ++failures;
      chains_summary.push_back({{"chain", c}, {"error", res.error}});
      continue;
    }
    const std::string name =
        trajectory_filename(c, setup.chains, setup.cfg.output_format);
    const std::string path = out_dir + "/" + name;
    if (setup.cfg.output_format == OutputFormat::Csv)
      write_trajectory_csv(path, *res.trajectory);
    else
      write_trajectory_binary(path, *res.trajectory);
    outputs.push_back(name);
    const State& last = res.trajectory->back();
    chains_summary.push_back(
        {{"chain", c},
         {"rows", res.trajectory->size()},
         {"final_time", res.trajectory->times.back()},
         {"final_xi", last.xi},
         {"draws", res.trajectory->brownian_increments_consumed.back()}});
  }
  write_manifest(out_dir, "simulate", setup, outputs);

  json summary;
  summary["subcommand"] = "simulate";
  summary["chains"] = chains_summary;
  summary["failures"] = failures;
  summary["seed"] = setup.seed;
  summary["scheme"] = scheme_name(integ.scheme);
  summary["steps"] = integ.n_steps;
  summary["dt"] = integ.dt;
  if (failures > 0 && failures == setup.chains)
    throw NumericError("simulate: every chain failed; first error: " +
                       results[0].error);
  write_text_file(out_dir + "/summary.json", summary.dump(2) + "\n");
  return summary.dump(2);
}

std::string run_diagnose(const std::string& config_text,
                         const std::string& out_dir,
                         const RunOverrides& overrides,
                         const std::string& trajectory_file) {
  RunSetup setup = prepare(config_text, overrides);
  ensure_dir(out_dir);
  const SystemParams& params = setup.cfg.system;

  Trajectory traj;
  if (!trajectory_file.empty()) {
    traj = trajectory_file.size() > 4 &&
                   trajectory_file.substr(trajectory_file.size() - 4) == ".bin"
               ? read_trajectory_binary(trajectory_file)
               : read_trajectory_csv(trajectory_file);
  } else {
    IntegratorConfig integ = setup.cfg.integrator;
    integ.seed = setup.seed;
    traj = simulate(setup.cfg.initial_state, integ, *setup.pot, params);
  }
  if (traj.states.empty())
    throw ContractViolation("diagnose: empty trajectory input");
  const Trajectory kept =
      drop_burn_in(traj, setup.cfg.diagnostics.burn_in_fraction);

  DiagnosticsReport report;
  report.burn_in_fraction = setup.cfg.diagnostics.burn_in_fraction;
  report.samples_used = static_cast<long>(kept.states.size());
  report.kinetic_temperature = temperature_estimate(kept, params);
  {
    double mean = 0.0;
    for (const auto& x : kept.states) mean += x.xi;
    mean /= kept.states.size();
    double var = 0.0;
    for (const auto& x : kept.states) var += (x.xi - mean) * (x.xi - mean);
    var /= std::max<std::size_t>(1, kept.states.size() - 1);
    report.xi_mean = mean;
    report.xi_variance = var;
  }
  if (params.dof() <= 2) {
    GibbsModel model(setup.pot, params);
    std::vector<double> qs, ps, xis;
    qs.reserve(kept.states.size());
    for (const auto& x : kept.states) {
      qs.push_back(x.q[0]);
      ps.push_back(x.p[0]);
      xis.push_back(x.xi);
    }
    if (params.dof() == 1)
      report.ks_q = ks_distance(qs, [&](double v) { return model.q_marginal_cdf(v); });
    report.ks_p = ks_distance(ps, [&](double v) { return model.p_marginal_cdf(v); });
    report.ks_xi = ks_distance(xis, [&](double v) { return model.xi_marginal_cdf(v); });
    if (setup.cfg.diagnostics.stationarity && params.dof() == 1)
      report.stationarity = stationarity_residual(model);
  }
  if (kept.states.size() >= 2) {
    report.ergodic_averages.emplace_back(
        "kinetic_norm_sq",
        ergodic_average(
            [&](const State& x) { return kinetic_norm_sq(x.p, params); }, kept));
    report.ergodic_averages.emplace_back(
        "q0_positive",
        ergodic_average(
            [&](const State& x) { return x.q[0] > 0.0 ? 1.0 : 0.0; }, kept));
  }

  if (setup.cfg.diagnostics.tv && setup.cfg.diagnostics.tv->enabled) {
    const TvConfig& tvc = *setup.cfg.diagnostics.tv;
    IntegratorConfig integ = setup.cfg.integrator;
    integ.seed = setup.seed;
    integ.thinning = tvc.snapshot_every;
    integ.n_steps = static_cast<long>(std::ceil(tvc.t_max / integ.dt));
    const auto run_ensemble = [&](const State& start, std::uint64_t salt) {
      IntegratorConfig ic = integ;
      ic.seed = splitmix64(setup.seed ^ salt);
      std::vector<State> x0s(tvc.chains, start);
      return ensemble_run(x0s, ic, *setup.pot, params);
    };
    const auto ens_a = run_ensemble(tvc.start_a, 0xA);
    const auto ens_b = run_ensemble(tvc.start_b, 0xB);
    std::vector<double> times;
    std::vector<std::vector<State>> snaps_a, snaps_b;
    const std::size_t rows = ens_a[0].trajectory ? ens_a[0].trajectory->size() : 0;
    for (std::size_t r = 0; r < rows; ++r) {
      times.push_back(ens_a[0].trajectory->times[r]);
      std::vector<State> sa, sb;
      for (const auto& res : ens_a)
        if (res.trajectory) sa.push_back(res.trajectory->states[r]);
      for (const auto& res : ens_b)
        if (res.trajectory) sb.push_back(res.trajectory->states[r]);
      const std::size_t n = std::min(sa.size(), sb.size());
      sa.resize(n);
      sb.resize(n);
      snaps_a.push_back(std::move(sa));
      snaps_b.push_back(std::move(sb));
    }
    report.tv = tv_decay(snaps_a, snaps_b, times);
    // Plot-ready series.
    std::string csv = "t,tv\n";
    for (const auto& pt : report.tv->series)
      csv += std::to_string(pt.t) + "," + std::to_string(pt.tv) + "\n";
    write_text_file(out_dir + "/tv_decay.csv", csv);
  }

  const std::string text = report.to_json();
  write_text_file(out_dir + "/diagnostics.json", text + "\n");
  write_manifest(out_dir, "diagnose", setup, json::array({"diagnostics.json"}));
  return text;
}

std::string run_drift_check(const std::string& config_text,
                            const std::string& out_dir,
                            const RunOverrides& overrides) {
  RunSetup setup = prepare(config_text, overrides);
  ensure_dir(out_dir);
  if (!setup.cfg.lyapunov)
    throw ConfigError("config: drift-check needs a 'lyapunov' section");
  const LyapunovConfig& lc = *setup.cfg.lyapunov;

  SelectOptions opts;
  opts.p_star_seed = lc.p_star_seed;
  opts.u_star_seed = lc.u_star_seed;
  opts.final_samples = lc.samples;
  opts.seed = lc.cert_seed;
  const SelectResult sel = select_params(lc.alpha, lc.beta0, lc.eps0,
                                         *setup.pot, setup.cfg.system, opts);
  const std::string text = sel.report.to_json(sel.lp);
  write_text_file(out_dir + "/drift_cert.json", text + "\n");
  write_manifest(out_dir, "drift-check", setup, json::array({"drift_cert.json"}));
  if (!sel.report.pass) {
    json j = json::parse(text);
    j["note"] = "certification FAILED within the escalation budget";
    return j.dump(2);
  }
  return text;
}

std::string run_control_demo(const std::string& config_text,
                             const std::string& out_dir,
                             const RunOverrides& overrides) {
  RunSetup setup = prepare(config_text, overrides);
  ensure_dir(out_dir);
  if (!setup.cfg.control)
    throw ConfigError("config: control-demo needs a 'control' section");
  const ControlConfig& cc = *setup.cfg.control;
  const SystemParams& params = setup.cfg.system;

  ControlBuildOptions build_opts;
  build_opts.delta = cc.delta;
  build_opts.dwell_split = cc.dwell_split;
  const ControlPath path = build_control_path(
      setup.cfg.initial_state, cc.t, cc.target, *setup.pot, params, build_opts);
  const ControlVerification verification =
      verify_control(path, setup.cfg.initial_state, *setup.pot, params);

  // Path CSV on a fine grid: u, q..., p..., xi, eta...
  {
    std::string csv = "u";
    const int d = params.dof();
    for (int c = 0; c < d; ++c) csv += ",q" + std::to_string(c);
    for (int c = 0; c < d; ++c) csv += ",p" + std::to_string(c);
    csv += ",xi";
    for (int c = 0; c < d; ++c) csv += ",eta" + std::to_string(c);
    csv += "\n";
    const int grid = 1000;
    char buf[32];
    const auto put = [&](double v) {
      std::snprintf(buf, sizeof(buf), "%.12g", v);
      csv += buf;
    };
    for (int i = 0; i <= grid; ++i) {
      const double u = cc.t * i / grid;
      const Eigen::VectorXd q = path.position(u);
      const Eigen::VectorXd v = path.velocity(u);
      const Eigen::VectorXd eta = path.control_at(u, *setup.pot, params);
      put(u);
      for (int c = 0; c < d; ++c) { csv += ','; put(q[c]); }
      for (int c = 0; c < d; ++c) { csv += ','; put(v[c] * params.mass_of_coord(c)); }
      csv += ',';
      put(path.xi_at(u, params));
      for (int c = 0; c < d; ++c) { csv += ','; put(eta[c]); }
      csv += '\n';
    }
    write_text_file(out_dir + "/control_path.csv", csv);
  }

  json j;
  j["subcommand"] = "control-demo";
  j["horizon"] = cc.t;
  j["min_xi"] = min_xi(setup.cfg.initial_state, cc.t, cc.target.q, params,
                       *setup.pot);
  j["target_xi"] = cc.target.xi;
  j["delta"] = path.delta();
  j["knots"] = path.knots();
  j["energy_integral"] = path.total_energy();
  j["endpoint_error"] = {{"q", verification.err_q},
                         {"p", verification.err_p},
                         {"xi", verification.err_xi},
                         {"max", verification.max_err}};
  j["ode_steps"] = verification.ode_steps;
  const std::string text = j.dump(2);
  write_text_file(out_dir + "/control_verification.json", text + "\n");
  write_manifest(out_dir, "control-demo", setup,
                 json::array({"control_path.csv", "control_verification.json"}));
  return text;
}

std::string run_specfun(const std::string& args_json) {
  json args = args_json.empty() ? json::object() : json::parse(args_json);
  if (!args.is_object()) throw ConfigError("specfun: arguments must be an object");
  for (const auto& [key, value] : args.items())
    if (key != "z" && key != "kBT")
      throw ConfigError("specfun: unknown key '" + key + "'");
  double kbt = 1.0;
  if (args.contains("kBT")) kbt = args["kBT"].get<double>();
  if (!(kbt > 0.0)) throw ConfigError("specfun: kBT must be positive");
  std::vector<double> zs = {0.5, 1.0, 2.0};
  if (args.contains("z")) {
    zs.clear();
    for (const auto& v : args["z"]) zs.push_back(v.get<double>());
  }
  const auto dm = specfun::dawson_max();
  json j;
  j["z_star"] = dm.z_star;
  j["d_max"] = dm.d_max;
  j["beta_star"] = specfun::beta_star_of(1.0 / kbt);
  j["kBT"] = kbt;
  json rows = json::array();
  for (double z : zs)
    rows.push_back({{"z", z},
                    {"dawson", specfun::dawson(z)},
                    {"f_unit", specfun::f_unit(z)}});
  j["rows"] = rows;
  return j.dump(2);
}

const char* library_version() { return "0.1.0"; }

}  // namespace nhb
