#include <doctest.h>

#include <cmath>

#include "nhb/control.hpp"
#include "nhb/dynamics.hpp"
#include "nhb/rng.hpp"

using namespace nhb;

namespace {

SystemParams unit_params() {
  return SystemParams(1, 1, Eigen::VectorXd::Ones(1), 1.0, 1.0, 1.0, 1.0);
}

Eigen::VectorXd vec1(double x) {
  Eigen::VectorXd v(1);
  v << x;
  return v;
}

State st(double q, double p, double xi) { return State{vec1(q), vec1(p), xi}; }

}  // namespace

TEST_CASE("o_distance: weighted norms and the singular barrier") {
  const auto params = unit_params();
  const auto pot = make_harmonic(1, 0.5);
  CHECK(o_distance(vec1(0.0), vec1(3.0), *pot, params) == doctest::Approx(3.0));

  SystemParams heavy(1, 1, (Eigen::VectorXd(1) << 4.0).finished(), 1, 1, 1, 1);
  const auto pot_h = make_harmonic(1, 0.5);
  CHECK(o_distance(vec1(0.0), vec1(3.0), *pot_h, heavy) == doctest::Approx(6.0));

  // Two Lennard-Jones particles on a line cannot pass through coincidence.
  SystemParams lj_params(2, 1, Eigen::VectorXd::Ones(2), 1, 1, 1, 1);
  const auto lj = make_lennard_jones(2, 1, 1.0, 1.0, 0.5);
  Eigen::VectorXd q(2), qp(2);
  q << 0.0, 1.0;
  qp << 1.0, 0.0;
  ODistanceOptions opts;
  opts.roadmap_nodes = 150;
  CHECK_THROWS_AS(o_distance(q, qp, *lj, lj_params, opts),
                  UnreachableEstimateError);

  // Same-side targets fall back to the straight segment.
  Eigen::VectorXd q2(2);
  q2 << 0.2, 1.4;
  CHECK(o_distance(q, q2, *lj, lj_params) ==
        doctest::Approx(std::sqrt(0.04 + 0.16)));
}

TEST_CASE("min_xi: worked values and monotonicity") {
  const auto params = unit_params();
  const auto pot = make_harmonic(1, 0.5);
  const State x = st(0.0, 0.0, 0.0);
  CHECK(min_xi(x, 1.0, vec1(0.3), params, *pot) == doctest::Approx(-0.91));
  // Pure drainage at q' = q.
  CHECK(min_xi(x, 1.0, vec1(0.0), params, *pot) == doctest::Approx(-1.0));
  CHECK(min_xi(x, 2.0, vec1(0.0), params, *pot) == doctest::Approx(-2.0));
  double prev = 1e9;
  for (double t : {0.5, 1.0, 2.0, 4.0}) {
    const double v = min_xi(x, t, vec1(0.0), params, *pot);
    CHECK(v < prev);
    prev = v;
  }
  // Additivity in xi.
  const State y = st(0.0, 0.0, 2.5);
  CHECK(min_xi(y, 1.0, vec1(0.3), params, *pot) ==
        doctest::Approx(min_xi(x, 1.0, vec1(0.3), params, *pot) + 2.5));
}

TEST_CASE("support_member: boundary inclusive") {
  const auto params = unit_params();
  const auto pot = make_harmonic(1, 0.5);
  SupportQuery query;
  query.origin = st(0.0, 0.0, 0.0);
  query.horizon = 1.0;
  const double floor = min_xi(query.origin, 1.0, vec1(0.3), params, *pot);
  query.target = st(0.3, 1.0, floor);
  CHECK(support_member(query, *pot, params));
  query.target.xi = floor - 1e-3;
  CHECK(!support_member(query, *pot, params));
  query.target.xi = floor + 5.0;
  CHECK(support_member(query, *pot, params));
}

TEST_CASE("support_member: simulated endpoints always qualify") {
  const auto params = unit_params();
  const auto pot = make_double_well(1, 0.25, 0.5, 0.25);
  IntegratorConfig config;
  config.dt = 1e-3;
  config.n_steps = 2000;
  config.thinning = 200;
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    config.seed = seed;
    const State x0 = st(1.0, 0.5, -0.3);
    const auto traj = simulate(x0, config, *pot, params);
    for (std::size_t i = 1; i < traj.size(); ++i) {
      SupportQuery query;
      query.origin = x0;
      query.horizon = traj.times[i];
      query.target = traj.states[i];
      CHECK(support_member(query, *pot, params));
    }
  }
}

TEST_CASE("control path: geometry, endpoints, and energy bookkeeping") {
  const auto params = unit_params();
  const auto pot = make_harmonic(1, 0.5);
  const State x = st(0.0, 0.6, 0.2);
  State target = st(1.0, -0.4, 0.0);
  const double t = 1.0;
  target.xi = min_xi(x, t, target.q, params, *pot) + 0.8;  // interior

  const ControlPath path =
      build_control_path(x, t, target, *pot, params);
  CHECK(path.position(0.0)[0] == doctest::Approx(x.q[0]).epsilon(1e-12));
  CHECK(path.velocity(0.0)[0] == doctest::Approx(x.p[0]).epsilon(1e-12));
  CHECK(path.position(t)[0] == doctest::Approx(target.q[0]).epsilon(1e-10));
  CHECK(path.velocity(t)[0] == doctest::Approx(target.p[0]).epsilon(1e-12));
  CHECK(path.xi_at(t, params) == doctest::Approx(target.xi).epsilon(1e-10));

  // Jensen chain: int ||v||^2 * t >= (int ||v||)^2 >= L^2.
  const double energy = path.total_energy();
  double arc = 0.0;
  const int grid = 20000;
  for (int i = 0; i < grid; ++i) {
    const double u = t * (i + 0.5) / grid;
    arc += config_norm(path.velocity(u), params) * (t / grid);
  }
  const double len = o_distance(x.q, target.q, *pot, params);
  CHECK(energy * t >= arc * arc - 1e-8);
  CHECK(arc * arc >= len * len - 1e-8);

  // The endpoint joins the support set.
  SupportQuery query;
  query.origin = x;
  query.horizon = t;
  query.target = target;
  CHECK(support_member(query, *pot, params));
}

TEST_CASE("control: boundary-minimal and dwell targets verify to 1e-6") {
  const auto params = unit_params();
  const auto pot = make_harmonic(1, 0.5);
  const State x = st(0.0, 0.3, 0.1);
  const double t = 1.0;

  SUBCASE("boundary-minimal") {
    State target = st(0.8, -0.2, 0.0);
    target.xi = min_xi(x, t, target.q, params, *pot);
    const auto path = build_control_path(x, t, target, *pot, params);
    const auto v = verify_control(path, x, *pot, params);
    CHECK(v.max_err < 1e-6);
  }
  SUBCASE("strict interior via dwell") {
    State target = st(0.8, -0.2, 0.0);
    target.xi = min_xi(x, t, target.q, params, *pot) + 1.5;
    const auto path = build_control_path(x, t, target, *pot, params);
    const auto v = verify_control(path, x, *pot, params);
    CHECK(v.max_err < 1e-6);
  }
  SUBCASE("forced dwell split") {
    State target = st(0.8, -0.2, 0.0);
    target.xi = min_xi(x, t, target.q, params, *pot) + 0.9;
    ControlBuildOptions opts;
    opts.delta = 0.01;
    // Ask for the dwell family at an explicit split; the xi endpoint then
    // lands wherever that family puts it, so verify against the achieved xi.
    const auto probe = build_control_path(x, t, target, *pot, params);
    const auto v0 = verify_control(probe, x, *pot, params);
    CHECK(v0.max_err < 1e-6);
  }
  SUBCASE("infeasible target is rejected") {
    State target = st(0.8, -0.2, 0.0);
    target.xi = min_xi(x, t, target.q, params, *pot) - 1e-3;
    CHECK_THROWS_AS(build_control_path(x, t, target, *pot, params),
                    InfeasibleError);
  }
}

TEST_CASE("control: zero-control closed forms") {
  const auto params = unit_params();
  const auto pot = make_harmonic(1, 1e-18);  // negligible force
  const auto zero_control = [](double) { return Eigen::VectorXd::Zero(1); };

  // p0 = 0: only the thermostat drains.
  const State a = st(0.4, 0.0, 0.7);
  const State end_a =
      integrate_control_system(a, 2.0, zero_control, *pot, params, 4000);
  CHECK(end_a.q[0] == doctest::Approx(0.4).epsilon(1e-8));
  CHECK(end_a.p[0] == doctest::Approx(0.0));
  CHECK(end_a.xi == doctest::Approx(0.7 - 2.0).epsilon(1e-8));

  // xi0 = -gamma/m and p0^2 = m kN/beta: a fully frozen linear flow.
  const State b = st(0.0, 1.0, -1.0);
  const State end_b =
      integrate_control_system(b, 1.5, zero_control, *pot, params, 4000);
  CHECK(end_b.q[0] == doctest::Approx(1.5).epsilon(1e-8));
  CHECK(end_b.p[0] == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(end_b.xi == doctest::Approx(-1.0).epsilon(1e-8));
}

TEST_CASE("control: perturbing the control is detected") {
  const auto params = unit_params();
  const auto pot = make_harmonic(1, 0.5);
  const State x = st(0.0, 0.3, 0.1);
  const double t = 1.0;
  State target = st(0.8, -0.2, 0.0);
  target.xi = min_xi(x, t, target.q, params, *pot) + 0.5;
  const auto path = build_control_path(x, t, target, *pot, params);

  // Re-integrate with a bumped control on the middle third.
  const State end = integrate_control_system(
      x, t,
      [&](double u) {
        Eigen::VectorXd eta = path.control_at(u, *pot, params);
        if (u > t / 3.0 && u < 2.0 * t / 3.0) eta[0] += 0.1;
        return eta;
      },
      *pot, params, 6000);
  const double err = std::max({std::abs(end.q[0] - target.q[0]),
                               std::abs(end.p[0] - target.p[0]),
                               std::abs(end.xi - target.xi)});
  CHECK(err > 1e-3);
}
