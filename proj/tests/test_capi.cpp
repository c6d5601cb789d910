// Exercises the shared-library boundary exactly as an external C consumer
// would: opaque handles, status codes, and the thread-local error message.
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <unistd.h>
#include <filesystem>
#include <string>

#include "nhb/nhb.h"

namespace {

const char* kDoubleWellSpec =
    R"({"type":"double_well","c1":0.25,"c2":0.5,"c3":0.25})";

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    static int n = 0;
    path = std::filesystem::temp_directory_path() /
           ("nhb-capi-" + std::to_string(::getpid()) + "-" + std::to_string(n++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace

TEST_CASE("capi: version and specfun surface") {
  CHECK(std::strlen(nhb_version()) > 0);
  double d = 0.0;
  REQUIRE(nhb_dawson(1.0, &d) == NHB_OK);
  CHECK(std::abs(d - 0.5380795069127684) < 1e-12);
  double z_star = 0, d_max = 0;
  REQUIRE(nhb_dawson_max(&z_star, &d_max) == NHB_OK);
  CHECK(std::abs(z_star - 0.9241388730) < 1e-9);
  double f = 0.0;
  REQUIRE(nhb_f_unit(2.5, &f) == NHB_OK);
  CHECK(std::abs(f - 0.9254096098693420) < 1e-10);
  double bs = 0.0;
  REQUIRE(nhb_beta_star(1.0, 1.0, &bs) == NHB_OK);
  CHECK(std::abs(bs - 0.427015) < 1e-4);
  // Null outputs and invalid args produce status codes plus messages.
  CHECK(nhb_dawson(1.0, nullptr) == NHB_ERR_INVALID_ARGUMENT);
  CHECK(std::strlen(nhb_last_error()) > 0);
  CHECK(nhb_dawson(std::nan(""), &d) == NHB_ERR_INVALID_ARGUMENT);
  CHECK(nhb_beta_star(-1.0, 1.0, &bs) == NHB_ERR_INVALID_ARGUMENT);
}

TEST_CASE("capi: handles, energies, and a short simulation") {
  nhb_params* params = nullptr;
  const double mass[1] = {1.0};
  REQUIRE(nhb_params_create(1, 1, mass, 1.0, 1.0, 1.0, 1.0, &params) == NHB_OK);

  nhb_potential* pot = nullptr;
  REQUIRE(nhb_potential_create(kDoubleWellSpec, 1, 1, 1.0, &pot) == NHB_OK);
  double zeta = 0.0;
  CHECK(nhb_potential_zeta(pot, &zeta) == NHB_OK);
  CHECK(zeta == doctest::Approx(1.5));

  const double q1[1] = {1.0};
  double u = -1.0;
  CHECK(nhb_potential_value(pot, q1, 1, &u) == NHB_OK);
  CHECK(u == doctest::Approx(0.0));
  double grad[1] = {99.0};
  CHECK(nhb_potential_gradient(pot, q1, 1, grad) == NHB_OK);
  CHECK(grad[0] == doctest::Approx(0.0));
  int inside = 0;
  CHECK(nhb_potential_in_domain(pot, q1, 1, &inside) == NHB_OK);
  CHECK(inside == 1);

  const double p2[1] = {2.0};
  double kin = 0.0;
  CHECK(nhb_kinetic_energy(params, p2, 1, &kin) == NHB_OK);
  CHECK(kin == doctest::Approx(2.0));
  double h = 0.0;
  CHECK(nhb_hamiltonian(pot, params, q1, p2, 1, 3.0, &h) == NHB_OK);
  CHECK(h == doctest::Approx(2.0 + 0.0 + 4.5));

  nhb_integrator_opts opts;
  opts.use_splitting = 1;
  opts.dt = 1e-3;
  opts.steps = 2000;
  opts.seed = 42;
  opts.chain = 0;
  opts.thinning = 100;
  opts.halve_dt_on_exit = 1;
  const double p0[1] = {0.0};
  nhb_trajectory* traj = nullptr;
  REQUIRE(nhb_simulate(pot, params, q1, p0, 1, 0.0, &opts, &traj) == NHB_OK);
  CHECK(nhb_trajectory_rows(traj) == 21);
  CHECK(nhb_trajectory_dof(traj) == 1);
  double t, q_out, p_out, xi_out;
  REQUIRE(nhb_trajectory_row(traj, 20, &t, &q_out, &p_out, &xi_out) == NHB_OK);
  CHECK(t == doctest::Approx(2.0));
  double sum_w, sum_wkin, sum_warc;
  uint64_t draws = 0;
  REQUIRE(nhb_trajectory_audit(traj, 20, &sum_w, &sum_wkin, &sum_warc,
                               &draws) == NHB_OK);
  CHECK(sum_w == doctest::Approx(2.0));
  CHECK(draws >= 2000);
  // The pathwise identity through the C surface.
  CHECK(std::abs((xi_out - 0.0) - (sum_wkin - sum_w)) < 1e-9);
  CHECK(nhb_trajectory_row(traj, 9999, &t, &q_out, &p_out, &xi_out) ==
        NHB_ERR_INVALID_ARGUMENT);

  double floor = 0.0;
  REQUIRE(nhb_min_xi(pot, params, q1, p0, 1, 0.0, 1.0, q1, &floor) == NHB_OK);
  CHECK(floor == doctest::Approx(-1.0));
  int member = 0;
  REQUIRE(nhb_support_member(pot, params, q1, p0, 1, 0.0, 1.0, q1, p0, floor,
                             &member) == NHB_OK);
  CHECK(member == 1);
  REQUIRE(nhb_support_member(pot, params, q1, p0, 1, 0.0, 1.0, q1, p0,
                             floor - 1e-3, &member) == NHB_OK);
  CHECK(member == 0);

  nhb_trajectory_destroy(traj);
  nhb_potential_destroy(pot);
  nhb_params_destroy(params);
}

TEST_CASE("capi: domain and config error codes") {
  nhb_potential* pot = nullptr;
  CHECK(nhb_potential_create("{\"type\":\"nope\"}", 1, 1, 1.0, &pot) ==
        NHB_ERR_CONFIG);
  CHECK(std::string(nhb_last_error()).find("nope") != std::string::npos);
  CHECK(nhb_potential_create("not json", 1, 1, 1.0, &pot) == NHB_ERR_CONFIG);

  nhb_params* params = nullptr;
  const double mass[2] = {1.0, 1.0};
  REQUIRE(nhb_params_create(2, 1, mass, 1.0, 1.0, 1.0, 1.0, &params) == NHB_OK);
  nhb_potential* lj = nullptr;
  REQUIRE(nhb_potential_create(
              R"({"type":"lennard_jones","strength":1.0,"r0":1.0,"confine":0.5})",
              2, 1, 1.0, &lj) == NHB_OK);
  const double coincident[2] = {0.5, 0.5};
  const double zeros[2] = {0.0, 0.0};
  double h = 0.0;
  CHECK(nhb_hamiltonian(lj, params, coincident, zeros, 2, 0.0, &h) ==
        NHB_ERR_DOMAIN);
  nhb_potential_destroy(lj);
  nhb_params_destroy(params);
}

TEST_CASE("capi: high-level specfun runner") {
  char* out = nullptr;
  REQUIRE(nhb_run_specfun(R"({"z": [1.0], "kBT": 2.0})", &out) == NHB_OK);
  const std::string text(out);
  nhb_string_free(out);
  CHECK(text.find("beta_star") != std::string::npos);
  CHECK(text.find("0.2135") != std::string::npos);
  CHECK(nhb_run_specfun(R"({"zz": 1})", &out) == NHB_ERR_CONFIG);
}

TEST_CASE("capi: high-level simulate runner writes files") {
  TempDir dir;
  const std::string config = R"({
    "config_version": 1,
    "potential": {"type": "double_well", "c1": 0.25, "c2": 0.5, "c3": 0.25},
    "system": {"particles": 1, "dim": 1, "mass": [1.0], "gamma": 1.0, "kB": 1.0, "T": 1.0, "a": 1.0},
    "integrator": {"scheme": "splitting", "dt": 0.002, "steps": 500, "seed": 5, "thinning": 50},
    "initial_state": {"q": [1.0], "p": [0.0], "xi": 0.0}
  })";
  char* out = nullptr;
  nhb_run_overrides ov{0, 0, 0};
  REQUIRE(nhb_run_simulate(config.c_str(), dir.path.string().c_str(), &ov,
                           &out) == NHB_OK);
  nhb_string_free(out);
  CHECK(std::filesystem::exists(dir.path / "trajectory.csv"));
  CHECK(std::filesystem::exists(dir.path / "manifest.json"));
  CHECK(std::filesystem::exists(dir.path / "summary.json"));

  // Config errors map to NHB_ERR_CONFIG.
  CHECK(nhb_run_simulate("{\"bad\": 1}", dir.path.string().c_str(), &ov,
                         &out) == NHB_ERR_CONFIG);
}
