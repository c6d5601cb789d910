// Command-line front end for the NHB sampler shared library.
// Talks to the core exclusively through the C API in nhb/nhb.h.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nhb/nhb.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

int exit_code_of(nhb_status status) {
  switch (status) {
    case NHB_OK:
      return kExitOk;
    case NHB_ERR_CONFIG:
    case NHB_ERR_INVALID_ARGUMENT:
      return kExitConfig;
    default:
      return kExitRuntime;
  }
}

struct CommonArgs {
  std::string config_path;
  std::string out_dir = "nhb-out";
  std::uint64_t seed = 0;
  bool has_seed = false;
  int chains = 0;
  bool quiet = false;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool needs_config = true) {
  auto* opt = cmd->add_option("--config", args.config_path, "run config file (JSON)");
  if (needs_config) opt->required();
  cmd->add_option("--out", args.out_dir, "output directory");
  cmd->add_option("--seed", args.seed, "override the config seed")
      ->each([&args](const std::string&) { args.has_seed = true; });
  cmd->add_option("--chains", args.chains, "override the chain count");
  cmd->add_flag("--quiet", args.quiet, "suppress stdout summaries");
}

int load_config(const CommonArgs& args, std::string& text) {
  std::ifstream in(args.config_path);
  if (!in) {
    std::cerr << "error: cannot read config file: " << args.config_path << "\n";
    return kExitConfig;
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  text = ss.str();
  return kExitOk;
}

nhb_run_overrides make_overrides(const CommonArgs& args) {
  nhb_run_overrides ov;
  ov.has_seed = args.has_seed ? 1 : 0;
  ov.seed = args.seed;
  ov.chains = args.chains;
  return ov;
}

int finish(const CommonArgs& args, nhb_status status, char* result) {
  if (status != NHB_OK) {
    std::cerr << "error: " << nhb_last_error() << "\n";
    return exit_code_of(status);
  }
  if (!args.quiet && result) std::cout << result << "\n";
  nhb_string_free(result);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nose-Hoover sampler under Brownian heating"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(nhb_version()));

  CommonArgs sim_args, diag_args, drift_args, ctl_args;
  std::string diag_traj;
  std::vector<double> spec_z;
  double spec_kbt = 1.0;
  bool spec_quiet = false;

  auto* sim = app.add_subcommand("simulate", "integrate trajectories and write them out");
  add_common(sim, sim_args);

  auto* diag = app.add_subcommand("diagnose", "sampling diagnostics against the Gibbs law");
  add_common(diag, diag_args);
  diag->add_option("--traj", diag_traj, "analyze an existing trajectory file");

  auto* drift = app.add_subcommand("drift-check", "certify the Lyapunov drift condition");
  add_common(drift, drift_args);

  auto* ctl = app.add_subcommand("control-demo", "build and verify a reachability path");
  add_common(ctl, ctl_args);

  auto* spec = app.add_subcommand("specfun", "print special-function values");
  spec->add_option("--z", spec_z, "evaluation points");
  spec->add_option("--kBT", spec_kbt, "temperature for beta*");
  spec->add_flag("--quiet", spec_quiet, "suppress output");

  CLI11_PARSE(app, argc, argv);

  if (sim->parsed()) {
    std::string text;
    if (int rc = load_config(sim_args, text)) return rc;
    char* result = nullptr;
    const nhb_run_overrides ov = make_overrides(sim_args);
    return finish(sim_args,
                  nhb_run_simulate(text.c_str(), sim_args.out_dir.c_str(), &ov,
                                   &result),
                  result);
  }
  if (diag->parsed()) {
    std::string text;
    if (int rc = load_config(diag_args, text)) return rc;
    char* result = nullptr;
    const nhb_run_overrides ov = make_overrides(diag_args);
    return finish(diag_args,
                  nhb_run_diagnose(text.c_str(), diag_args.out_dir.c_str(), &ov,
                                   diag_traj.empty() ? nullptr : diag_traj.c_str(),
                                   &result),
                  result);
  }
  if (drift->parsed()) {
    std::string text;
    if (int rc = load_config(drift_args, text)) return rc;
    char* result = nullptr;
    const nhb_run_overrides ov = make_overrides(drift_args);
    return finish(drift_args,
                  nhb_run_drift_check(text.c_str(), drift_args.out_dir.c_str(),
                                      &ov, &result),
                  result);
  }
  if (ctl->parsed()) {
    std::string text;
    if (int rc = load_config(ctl_args, text)) return rc;
    char* result = nullptr;
    const nhb_run_overrides ov = make_overrides(ctl_args);
    return finish(ctl_args,
                  nhb_run_control_demo(text.c_str(), ctl_args.out_dir.c_str(),
                                       &ov, &result),
                  result);
  }
  if (spec->parsed()) {
    std::ostringstream args_json;
    args_json << "{\"kBT\": " << spec_kbt;
    if (!spec_z.empty()) {
      args_json << ", \"z\": [";
      for (std::size_t i = 0; i < spec_z.size(); ++i)
        args_json << (i ? ", " : "") << spec_z[i];
      args_json << "]";
    }
    args_json << "}";
    char* result = nullptr;
    const nhb_status status = nhb_run_specfun(args_json.str().c_str(), &result);
    if (status != NHB_OK) {
      std::cerr << "error: " << nhb_last_error() << "\n";
      return exit_code_of(status);
    }
    if (!spec_quiet) std::cout << result << "\n";
    nhb_string_free(result);
    return kExitOk;
  }
  return kExitConfig;
}
