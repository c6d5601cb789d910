// End-to-end checks of the installed command-line tool, spawned as a real
// subprocess against the sample configs.
#include <doctest.h>

#include <cstdlib>
#include <unistd.h>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace {

namespace fs = std::filesystem;

struct TempDir {
  fs::path path;
  TempDir() {
    static int n = 0;
    path = fs::temp_directory_path() /
           ("nhb-cli-" + std::to_string(::getpid()) + "-" + std::to_string(n++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

int run(const std::string& args, const fs::path& capture) {
  const std::string cmd =
      std::string(NHB_CLI_PATH) + " " + args + " > " + capture.string() + " 2>&1";
  const int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string data(const std::string& name) {
  return (fs::path(NHB_TEST_DATA) / name).string();
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

}  // namespace

TEST_CASE("cli: specfun prints the threshold constants") {
  TempDir dir;
  const int rc = run("specfun --z 1.0 --kBT 1.0", dir.path / "out.txt");
  CHECK(rc == 0);
  const std::string out = slurp(dir.path / "out.txt");
  CHECK(out.find("0.427016") != std::string::npos);
  CHECK(out.find("0.538079") != std::string::npos);
}

TEST_CASE("cli: simulate produces the documented artifacts, bit-stable") {
  TempDir dir;
  const fs::path cfg = dir.path / "cfg.json";
  write(cfg, R"({
    "config_version": 1,
    "potential": {"type": "double_well", "c1": 0.25, "c2": 0.5, "c3": 0.25},
    "system": {"particles": 1, "dim": 1, "mass": [1.0], "gamma": 1.0, "kB": 1.0, "T": 1.0, "a": 1.0},
    "integrator": {"scheme": "splitting", "dt": 0.002, "steps": 2000, "seed": 31, "thinning": 100},
    "initial_state": {"q": [1.0], "p": [0.0], "xi": 0.0}
  })");
  const fs::path out_a = dir.path / "a";
  const fs::path out_b = dir.path / "b";
  CHECK(run("simulate --config " + cfg.string() + " --out " + out_a.string() +
                " --quiet",
            dir.path / "log_a.txt") == 0);
  CHECK(run("simulate --config " + cfg.string() + " --out " + out_b.string() +
                " --quiet",
            dir.path / "log_b.txt") == 0);
  const std::string traj_a = slurp(out_a / "trajectory.csv");
  const std::string traj_b = slurp(out_b / "trajectory.csv");
  CHECK(!traj_a.empty());
  CHECK(traj_a == traj_b);  // same config + seed: byte-identical
  CHECK(traj_a.find("t,q0,p0,xi\n") != std::string::npos);
  CHECK(slurp(out_a / "manifest.json") == slurp(out_b / "manifest.json"));

  // A different seed changes the trajectory.
  const fs::path out_c = dir.path / "c";
  CHECK(run("simulate --config " + cfg.string() + " --out " + out_c.string() +
                " --seed 77 --quiet",
            dir.path / "log_c.txt") == 0);
  CHECK(slurp(out_c / "trajectory.csv") != traj_a);
}

TEST_CASE("cli: config errors exit with code 2 and name the problem") {
  TempDir dir;
  const fs::path cfg = dir.path / "bad.json";
  write(cfg, R"({
    "config_version": 1,
    "potential": {"type": "double_well", "c1": 0.25, "c2": 0.5, "c3": 0.25},
    "system": {"particles": 1, "dim": 1, "mass": [1.0], "gamma": 1.0, "kB": 1.0, "T": 1.0, "a": 1.0},
    "integrator": {"scheme": "splitting", "dt": 0.002, "steps": 10, "seed": 1},
    "initial_state": {"q": [1.0], "p": [0.0], "xi": 0.0},
    "lyapunov": {"alpha": 1.0, "beta0": 0.5, "eps0": 0.06}
  })");
  const int rc = run("drift-check --config " + cfg.string() + " --out " +
                         (dir.path / "out").string(),
                     dir.path / "log.txt");
  CHECK(rc == 2);
  const std::string log = slurp(dir.path / "log.txt");
  CHECK(log.find("beta*") != std::string::npos);
  CHECK(log.find("0.427") != std::string::npos);

  // Unknown key.
  const fs::path cfg2 = dir.path / "unknown.json";
  write(cfg2, R"({"config_version": 1, "oops": true})");
  CHECK(run("simulate --config " + cfg2.string() + " --out " +
                (dir.path / "o2").string(),
            dir.path / "log2.txt") == 2);
  CHECK(slurp(dir.path / "log2.txt").find("oops") != std::string::npos);

  // Missing config file.
  CHECK(run("simulate --config /nonexistent.json --out " +
                (dir.path / "o3").string(),
            dir.path / "log3.txt") == 2);
}

TEST_CASE("cli: control demo emits path and verification artifacts") {
  TempDir dir;
  const int rc = run("control-demo --config " + data("harmonic.json") +
                         " --out " + (dir.path / "out").string() + " --quiet",
                     dir.path / "log.txt");
  CHECK(rc == 0);
  CHECK(fs::exists(dir.path / "out" / "control_path.csv"));
  const std::string verification =
      slurp(dir.path / "out" / "control_verification.json");
  CHECK(verification.find("endpoint_error") != std::string::npos);
  const std::string header = slurp(dir.path / "out" / "control_path.csv")
                                 .substr(0, 64);
  CHECK(header.find("u,q0,p0,xi,eta0") == 0);
}

TEST_CASE("cli: diagnose on the sample config") {
  TempDir dir;
  const fs::path cfg = dir.path / "cfg.json";
  write(cfg, R"({
    "config_version": 1,
    "potential": {"type": "double_well", "c1": 0.25, "c2": 0.5, "c3": 0.25},
    "system": {"particles": 1, "dim": 1, "mass": [1.0], "gamma": 1.0, "kB": 1.0, "T": 1.0, "a": 1.0},
    "integrator": {"scheme": "splitting", "dt": 0.002, "steps": 20000, "seed": 3, "thinning": 10},
    "initial_state": {"q": [1.0], "p": [0.0], "xi": 0.0},
    "diagnostics": {"burn_in_fraction": 0.1}
  })");
  const int rc = run("diagnose --config " + cfg.string() + " --out " +
                         (dir.path / "out").string() + " --quiet",
                     dir.path / "log.txt");
  CHECK(rc == 0);
  const std::string report = slurp(dir.path / "out" / "diagnostics.json");
  CHECK(report.find("\"all_finite\": true") != std::string::npos);
  CHECK(report.find("kinetic_temperature") != std::string::npos);
  CHECK(report.find("ks_q") != std::string::npos);
}
