#pragma once

#include <string>

#include "nhb/dynamics.hpp"

namespace nhb {

/// Trajectory files carry a version comment, then a header row
/// t,q0,...,p0,...,xi, then one row per stored state at full precision.
void write_trajectory_csv(const std::string& path, const Trajectory& traj);
Trajectory read_trajectory_csv(const std::string& path);

/// Compact binary frame: magic "NHBT", u32 version, u32 dof, u64 rows,
/// then rows of (t, q..., p..., xi) as little-endian doubles.
void write_trajectory_binary(const std::string& path, const Trajectory& traj);
Trajectory read_trajectory_binary(const std::string& path);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace nhb
