#include "nhb/config.hpp"

#include <set>

#include "nhb/specfun.hpp"

namespace nhb {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& msg) { throw ConfigError("config: " + msg); }

void require_keys(const json& obj, const std::string& where,
                  const std::set<std::string>& known) {
  if (!obj.is_object()) bad("'" + where + "' must be an object");
  for (const auto& [key, value] : obj.items())
    if (!known.count(key)) bad("unknown key '" + key + "' in '" + where + "'");
}

double get_num(const json& obj, const std::string& where,
               const std::string& key, std::optional<double> fallback = {}) {
  if (!obj.contains(key)) {
    if (fallback) return *fallback;
    bad("missing '" + key + "' in '" + where + "'");
  }
  if (!obj[key].is_number()) bad("'" + where + "." + key + "' must be a number");
  return obj[key].get<double>();
}

long get_int(const json& obj, const std::string& where, const std::string& key,
             std::optional<long> fallback = {}) {
  if (!obj.contains(key)) {
    if (fallback) return *fallback;
    bad("missing '" + key + "' in '" + where + "'");
  }
  if (!obj[key].is_number_integer())
    bad("'" + where + "." + key + "' must be an integer");
  return obj[key].get<long>();
}

std::string get_str(const json& obj, const std::string& where,
                    const std::string& key,
                    std::optional<std::string> fallback = {}) {
  if (!obj.contains(key)) {
    if (fallback) return *fallback;
    bad("missing '" + key + "' in '" + where + "'");
  }
  if (!obj[key].is_string()) bad("'" + where + "." + key + "' must be a string");
  return obj[key].get<std::string>();
}

Eigen::VectorXd get_vector(const json& obj, const std::string& where,
                           const std::string& key) {
  if (!obj.contains(key) || !obj[key].is_array())
    bad("'" + where + "." + key + "' must be an array of numbers");
  const auto& arr = obj[key];
  Eigen::VectorXd v(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number()) bad("'" + where + "." + key + "' must be numeric");
    v[i] = arr[i].get<double>();
  }
  return v;
}

State parse_state(const json& obj, const std::string& where, int dof) {
  require_keys(obj, where, {"q", "p", "xi"});
  State x;
  x.q = get_vector(obj, where, "q");
  x.p = get_vector(obj, where, "p");
  x.xi = get_num(obj, where, "xi");
  if (x.q.size() != dof || x.p.size() != dof)
    bad("'" + where + "': q and p must have length " + std::to_string(dof));
  if (!x.finite()) bad("'" + where + "': coordinates must be finite");
  return x;
}

}  // namespace

PotentialHandle potential_from_spec(const json& spec, int particles, int dim,
                                    double beta) {
  if (!spec.is_object()) bad("'potential' must be an object");
  const std::string type = get_str(spec, "potential", "type");
  const int dof = particles * dim;
  PotentialHandle pot;
  if (type == "harmonic") {
    require_keys(spec, "potential", {"type", "c", "zeta"});
    pot = make_harmonic(dof, get_num(spec, "potential", "c"),
                        get_num(spec, "potential", "zeta", 1.5));
  } else if (type == "double_well") {
    require_keys(spec, "potential", {"type", "c1", "c2", "c3", "zeta"});
    pot = make_double_well(dof, get_num(spec, "potential", "c1"),
                           get_num(spec, "potential", "c2"),
                           get_num(spec, "potential", "c3"),
                           get_num(spec, "potential", "zeta", 1.5));
  } else if (type == "polynomial") {
    require_keys(spec, "potential", {"type", "coeffs", "zeta"});
    const Eigen::VectorXd c = get_vector(spec, "potential", "coeffs");
    pot = make_polynomial(dof,
                          std::vector<double>(c.data(), c.data() + c.size()),
                          get_num(spec, "potential", "zeta", 1.5));
  } else if (type == "lennard_jones") {
    require_keys(spec, "potential", {"type", "strength", "r0", "confine", "zeta"});
    pot = make_lennard_jones(particles, dim,
                             get_num(spec, "potential", "strength"),
                             get_num(spec, "potential", "r0"),
                             get_num(spec, "potential", "confine"),
                             get_num(spec, "potential", "zeta", 1.9));
  } else {
    bad("unknown potential type '" + type + "'");
  }
  check_integrability(*pot, beta);
  return pot;
}

PotentialHandle RunConfig::make_potential() const {
  return potential_from_spec(potential_spec, system.particles(), system.dim(),
                             system.beta());
}

RunConfig parse_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    bad(std::string("not valid JSON: ") + e.what());
  }
  require_keys(doc, "<root>",
               {"config_version", "potential", "system", "integrator",
                "initial_state", "chains", "output", "diagnostics", "lyapunov",
                "control"});
  RunConfig cfg;
  cfg.raw = doc;
  cfg.config_version = static_cast<int>(get_int(doc, "<root>", "config_version"));
  if (cfg.config_version != 1)
    bad("unsupported config_version " + std::to_string(cfg.config_version));
  if (!doc.contains("potential")) bad("missing 'potential'");
  if (!doc.contains("system")) bad("missing 'system'");
  cfg.potential_spec = doc["potential"];

  {
    const json& sys = doc["system"];
    require_keys(sys, "system",
                 {"particles", "dim", "mass", "gamma", "kB", "T", "a"});
    const int n = static_cast<int>(get_int(sys, "system", "particles"));
    const int k = static_cast<int>(get_int(sys, "system", "dim"));
    cfg.system =
        SystemParams(n, k, get_vector(sys, "system", "mass"),
                     get_num(sys, "system", "gamma"),
                     get_num(sys, "system", "kB", 1.0),
                     get_num(sys, "system", "T"), get_num(sys, "system", "a"));
  }

  if (doc.contains("integrator")) {
    const json& integ = doc["integrator"];
    require_keys(integ, "integrator",
                 {"scheme", "dt", "steps", "seed", "boundary_policy",
                  "thinning", "max_halvings"});
    const std::string scheme = get_str(integ, "integrator", "scheme", "splitting");
    if (scheme == "splitting")
      cfg.integrator.scheme = Scheme::Splitting;
    else if (scheme == "euler_maruyama")
      cfg.integrator.scheme = Scheme::EulerMaruyama;
    else
      bad("integrator.scheme must be 'splitting' or 'euler_maruyama'");
    cfg.integrator.dt = get_num(integ, "integrator", "dt");
    cfg.integrator.n_steps = get_int(integ, "integrator", "steps");
    cfg.integrator.seed =
        static_cast<std::uint64_t>(get_int(integ, "integrator", "seed", 1));
    const std::string policy =
        get_str(integ, "integrator", "boundary_policy", "halve_dt");
    if (policy == "halve_dt")
      cfg.integrator.boundary_policy = BoundaryPolicy::HalveDt;
    else if (policy == "reject_step")
      cfg.integrator.boundary_policy = BoundaryPolicy::RejectStep;
    else
      bad("integrator.boundary_policy must be 'halve_dt' or 'reject_step'");
    cfg.integrator.thinning = get_int(integ, "integrator", "thinning", 1);
    cfg.integrator.max_halvings =
        static_cast<int>(get_int(integ, "integrator", "max_halvings", 30));
    cfg.integrator.validate();
  }

  if (doc.contains("initial_state")) {
    cfg.initial_state =
        parse_state(doc["initial_state"], "initial_state", cfg.system.dof());
  } else {
    cfg.initial_state.q = Eigen::VectorXd::Zero(cfg.system.dof());
    cfg.initial_state.p = Eigen::VectorXd::Zero(cfg.system.dof());
    cfg.initial_state.xi = 0.0;
  }

  if (doc.contains("chains")) {
    cfg.chains = static_cast<int>(get_int(doc, "<root>", "chains"));
    if (cfg.chains < 1) bad("chains must be >= 1");
  }

  if (doc.contains("output")) {
    const json& out = doc["output"];
    require_keys(out, "output", {"format"});
    const std::string format = get_str(out, "output", "format", "csv");
    if (format == "csv")
      cfg.output_format = OutputFormat::Csv;
    else if (format == "binary")
      cfg.output_format = OutputFormat::Binary;
    else
      bad("output.format must be 'csv' or 'binary'");
  }

  if (doc.contains("diagnostics")) {
    const json& diag = doc["diagnostics"];
    require_keys(diag, "diagnostics",
                 {"burn_in_fraction", "stationarity", "tv"});
    cfg.diagnostics.burn_in_fraction =
        get_num(diag, "diagnostics", "burn_in_fraction", 0.1);
    if (cfg.diagnostics.burn_in_fraction < 0.0 ||
        cfg.diagnostics.burn_in_fraction >= 1.0)
      bad("diagnostics.burn_in_fraction must lie in [0, 1)");
    if (diag.contains("stationarity")) {
      if (!diag["stationarity"].is_boolean())
        bad("diagnostics.stationarity must be a boolean");
      cfg.diagnostics.stationarity = diag["stationarity"].get<bool>();
    }
    if (diag.contains("tv")) {
      const json& tv = diag["tv"];
      require_keys(tv, "diagnostics.tv",
                   {"enabled", "chains", "t_max", "snapshot_every", "start_a",
                    "start_b"});
      TvConfig tvc;
      if (tv.contains("enabled")) {
        if (!tv["enabled"].is_boolean())
          bad("diagnostics.tv.enabled must be a boolean");
        tvc.enabled = tv["enabled"].get<bool>();
      }
      tvc.chains = static_cast<int>(get_int(tv, "diagnostics.tv", "chains", 10000));
      tvc.t_max = get_num(tv, "diagnostics.tv", "t_max", 6.0);
      tvc.snapshot_every = get_int(tv, "diagnostics.tv", "snapshot_every", 250);
      tvc.start_a = tv.contains("start_a")
                        ? parse_state(tv["start_a"], "diagnostics.tv.start_a",
                                      cfg.system.dof())
                        : cfg.initial_state;
      tvc.start_b = tv.contains("start_b")
                        ? parse_state(tv["start_b"], "diagnostics.tv.start_b",
                                      cfg.system.dof())
                        : cfg.initial_state;
      cfg.diagnostics.tv = tvc;
    }
  }

  if (doc.contains("lyapunov")) {
    const json& lyap = doc["lyapunov"];
    require_keys(lyap, "lyapunov",
                 {"alpha", "beta0", "eps0", "p_star_seed", "u_star_seed",
                  "samples", "cert_seed"});
    LyapunovConfig lc;
    lc.alpha = get_num(lyap, "lyapunov", "alpha", 1.0);
    lc.beta0 = get_num(lyap, "lyapunov", "beta0");
    lc.eps0 = get_num(lyap, "lyapunov", "eps0");
    lc.p_star_seed = get_num(lyap, "lyapunov", "p_star_seed", 8.0);
    lc.u_star_seed = get_num(lyap, "lyapunov", "u_star_seed", 8.0);
    lc.samples = get_int(lyap, "lyapunov", "samples", 120000);
    lc.cert_seed =
        static_cast<std::uint64_t>(get_int(lyap, "lyapunov", "cert_seed", 2024));
    // Cross-field gate: the admissible-exponent threshold.
    const double bs = specfun::beta_star(cfg.system);
    if (!(lc.beta0 > 0.0 && lc.beta0 < bs))
      bad("lyapunov.beta0 = " + std::to_string(lc.beta0) +
          " violates beta0 < beta* = " + std::to_string(bs));
    if (!(lc.eps0 > 0.0 && lc.eps0 < lc.beta0))
      bad("lyapunov.eps0 must lie in (0, beta0)");
    if (!(lc.alpha > 0.0)) bad("lyapunov.alpha must be positive");
    cfg.lyapunov = lc;
  }

  if (doc.contains("control")) {
    const json& ctl = doc["control"];
    require_keys(ctl, "control", {"t", "target", "delta", "dwell_split"});
    ControlConfig cc;
    cc.t = get_num(ctl, "control", "t");
    if (!(cc.t > 0.0)) bad("control.t must be positive");
    if (!ctl.contains("target")) bad("missing 'control.target'");
    cc.target = parse_state(ctl["target"], "control.target", cfg.system.dof());
    cc.delta = get_num(ctl, "control", "delta", 0.0);
    if (ctl.contains("dwell_split"))
      cc.dwell_split = get_num(ctl, "control", "dwell_split");
    cfg.control = cc;
  }

  // The potential is constructed (and its spec validated) eagerly so config
  // errors surface before any run.
  const PotentialHandle pot = cfg.make_potential();
  if (!pot->in_domain(cfg.initial_state.q))
    bad("initial_state.q lies outside the potential domain");
  return cfg;
}

}  // namespace nhb
