#include "nhb/io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

namespace nhb {

namespace {
constexpr char kCsvMagic[] = "# nhb trajectory v1";
constexpr char kBinMagic[4] = {'N', 'H', 'B', 'T'};

void fail_io(const std::string& what, const std::string& path) {
  throw Error(what + ": " + path);
}
}  // namespace

void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
  std::ofstream out(path);
  if (!out) fail_io("io: cannot open for writing", path);
  const int d = traj.states.empty() ? 0 : static_cast<int>(traj.states[0].q.size());
  out << kCsvMagic << "\n";
  out << "t";
  for (int c = 0; c < d; ++c) out << ",q" << c;
  for (int c = 0; c < d; ++c) out << ",p" << c;
  out << ",xi\n";
  char buf[32];
  const auto put = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << buf;
  };
  for (std::size_t i = 0; i < traj.states.size(); ++i) {
    put(traj.times[i]);
    for (int c = 0; c < d; ++c) {
      out << ',';
      put(traj.states[i].q[c]);
    }
    for (int c = 0; c < d; ++c) {
      out << ',';
      put(traj.states[i].p[c]);
    }
    out << ',';
    put(traj.states[i].xi);
    out << '\n';
  }
  if (!out) fail_io("io: write failed", path);
}

Trajectory read_trajectory_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail_io("io: cannot open", path);
  std::string line;
  if (!std::getline(in, line)) fail_io("io: empty trajectory file", path);
  if (line.rfind("#", 0) == 0) {
    if (!std::getline(in, line)) fail_io("io: missing header row", path);
  }
  // Header row: t,q0..,p0..,xi
  int columns = 1;
  for (char ch : line)
    if (ch == ',') ++columns;
  const int d = (columns - 2) / 2;
  if (columns != 2 + 2 * d) fail_io("io: malformed trajectory header", path);
  Trajectory traj;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    std::vector<double> vals;
    while (std::getline(row, cell, ',')) vals.push_back(std::stod(cell));
    if (static_cast<int>(vals.size()) != columns)
      fail_io("io: malformed trajectory row", path);
    State x;
    x.q.resize(d);
    x.p.resize(d);
    for (int c = 0; c < d; ++c) x.q[c] = vals[1 + c];
    for (int c = 0; c < d; ++c) x.p[c] = vals[1 + d + c];
    x.xi = vals[1 + 2 * d];
    traj.times.push_back(vals[0]);
    traj.states.push_back(std::move(x));
    traj.sum_w.push_back(0.0);
    traj.sum_wkin.push_back(0.0);
    traj.sum_warc.push_back(0.0);
    traj.brownian_increments_consumed.push_back(0);
  }
  traj.total_steps = static_cast<long>(traj.states.size()) - 1;
  return traj;
}

void write_trajectory_binary(const std::string& path, const Trajectory& traj) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail_io("io: cannot open for writing", path);
  const std::uint32_t version = 1;
  const std::uint32_t d =
      traj.states.empty() ? 0 : static_cast<std::uint32_t>(traj.states[0].q.size());
  const std::uint64_t rows = traj.states.size();
  out.write(kBinMagic, 4);
  out.write(reinterpret_cast<const char*>(&version), 4);
  out.write(reinterpret_cast<const char*>(&d), 4);
  out.write(reinterpret_cast<const char*>(&rows), 8);
  for (std::size_t i = 0; i < rows; ++i) {
    const auto put = [&](double v) {
      out.write(reinterpret_cast<const char*>(&v), 8);
    };
    put(traj.times[i]);
    for (std::uint32_t c = 0; c < d; ++c) put(traj.states[i].q[c]);
    for (std::uint32_t c = 0; c < d; ++c) put(traj.states[i].p[c]);
    put(traj.states[i].xi);
  }
  if (!out) fail_io("io: write failed", path);
}

Trajectory read_trajectory_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail_io("io: cannot open", path);
  char magic[4];
  std::uint32_t version = 0, d = 0;
  std::uint64_t rows = 0;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&version), 4);
  in.read(reinterpret_cast<char*>(&d), 4);
  in.read(reinterpret_cast<char*>(&rows), 8);
  if (!in || std::memcmp(magic, kBinMagic, 4) != 0 || version != 1)
    fail_io("io: not a trajectory frame", path);
  Trajectory traj;
  for (std::uint64_t i = 0; i < rows; ++i) {
    double t;
    State x;
    x.q.resize(d);
    x.p.resize(d);
    const auto get = [&](double& v) {
      in.read(reinterpret_cast<char*>(&v), 8);
    };
    get(t);
    for (std::uint32_t c = 0; c < d; ++c) get(x.q[c]);
    for (std::uint32_t c = 0; c < d; ++c) get(x.p[c]);
    get(x.xi);
    if (!in) fail_io("io: truncated trajectory frame", path);
    traj.times.push_back(t);
    traj.states.push_back(std::move(x));
    traj.sum_w.push_back(0.0);
    traj.sum_wkin.push_back(0.0);
    traj.sum_warc.push_back(0.0);
    traj.brownian_increments_consumed.push_back(0);
  }
  traj.total_steps = static_cast<long>(rows) - 1;
  return traj;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) fail_io("io: cannot open for writing", path);
  out << content;
  if (!out) fail_io("io: write failed", path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail_io("io: cannot open", path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace nhb
