#pragma once

#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "nhb/dynamics.hpp"
#include "nhb/model.hpp"

namespace nhb {

struct TvConfig {
  bool enabled = false;
  int chains = 10000;
  double t_max = 6.0;
  long snapshot_every = 250;
  State start_a;
  State start_b;
};

struct DiagnosticsConfig {
  double burn_in_fraction = 0.1;
  bool stationarity = false;
  std::optional<TvConfig> tv;
};

struct LyapunovConfig {
  double alpha = 1.0;
  double beta0 = 0.2;
  double eps0 = 0.06;
  double p_star_seed = 8.0;
  double u_star_seed = 8.0;
  long samples = 120000;
  std::uint64_t cert_seed = 2024;
};

struct ControlConfig {
  double t = 1.0;
  State target;
  double delta = 0.0;  // 0: automatic
  std::optional<double> dwell_split;
};

enum class OutputFormat { Csv, Binary };

/// Parsed and validated run configuration.  Parsing is strict: unknown
/// keys anywhere in the document are errors.
struct RunConfig {
  int config_version = 1;
  nlohmann::json potential_spec;
  SystemParams system{1, 1, Eigen::VectorXd::Ones(1), 1.0, 1.0, 1.0, 1.0};
  IntegratorConfig integrator;
  State initial_state;
  int chains = 1;
  OutputFormat output_format = OutputFormat::Csv;
  DiagnosticsConfig diagnostics;
  std::optional<LyapunovConfig> lyapunov;
  std::optional<ControlConfig> control;

  PotentialHandle make_potential() const;

  /// Canonical serialized form used for the manifest hash.
  std::string canonical() const { return raw.dump(); }
  nlohmann::json raw;
};

/// Parses a config document; throws ConfigError naming the offending key
/// or constraint.  Cross-field checks (mass length, state dimensions,
/// beta0 < beta*, dt > 0, domain membership) run here, before any run.
RunConfig parse_config(const std::string& json_text);

/// A potential handle from a standalone spec document (the `potential`
/// object of a run config).
PotentialHandle potential_from_spec(const nlohmann::json& spec, int particles,
                                    int dim, double beta);

}  // namespace nhb
