#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace nhb {

struct RunOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> chains;
};

/// High-level entry points behind the CLI subcommands.  Each takes the
/// config document text, writes its artifacts under out_dir (plus a
/// manifest), and returns a summary JSON string.
std::string run_simulate(const std::string& config_text,
                         const std::string& out_dir,
                         const RunOverrides& overrides = {});

std::string run_diagnose(const std::string& config_text,
                         const std::string& out_dir,
                         const RunOverrides& overrides = {},
                         const std::string& trajectory_file = "");

std::string run_drift_check(const std::string& config_text,
                            const std::string& out_dir,
                            const RunOverrides& overrides = {});

std::string run_control_demo(const std::string& config_text,
                             const std::string& out_dir,
                             const RunOverrides& overrides = {});

/// Table of special-function values; args_json: {"z": [..], "kBT": 1.0}.
std::string run_specfun(const std::string& args_json);

const char* library_version();

}  // namespace nhb
