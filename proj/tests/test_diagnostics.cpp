#include <doctest.h>

#include <cmath>

#include "nhb/diagnostics.hpp"
#include "nhb/rng.hpp"
#include "support/oracles.hpp"

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

Trajectory make_traj(const std::vector<State>& states, double dt = 1.0) {
  Trajectory t;
  for (std::size_t i = 0; i < states.size(); ++i) {
    t.times.push_back(i * dt);
    t.states.push_back(states[i]);
    t.sum_w.push_back(i * dt);
    t.sum_wkin.push_back(0.0);
    t.sum_warc.push_back(0.0);
    t.brownian_increments_consumed.push_back(0);
  }
  return t;
}

}  // namespace

TEST_CASE("gibbs model: density ratios cancel the normalization") {
  const auto params = unit_params();
  const auto pot = make_harmonic(1, 0.5);
  GibbsModel model(pot, params);
  const State x1 = st(0.5, 1.0, -0.5);
  const State x2 = st(-1.0, 0.2, 0.7);
  const double h1 = hamiltonian(x1, *pot, params);
  const double h2 = hamiltonian(x2, *pot, params);
  const double lhs = model.log_density(x1) - model.log_density(x2);
  CHECK(lhs == doctest::Approx(-(h1 - h2)).epsilon(1e-12));
  // Outside-domain positions have zero density.
  SystemParams lj_params(2, 1, Eigen::VectorXd::Ones(2), 1, 1, 1, 1);
  // (log_density handles the domain through the potential value itself.)
}

TEST_CASE("gibbs model: marginals are the expected Gaussians") {
  const auto params = unit_params();
  const auto pot = make_harmonic(1, 0.5);  // U = q^2/2: standard normal q
  GibbsModel model(pot, params);
  for (double x : {-2.0, -0.5, 0.0, 0.8, 1.7}) {
    CHECK(model.q_marginal_cdf(x) ==
          doctest::Approx(oracles::normal_cdf(x)).epsilon(1e-6));
    CHECK(model.p_marginal_cdf(x) ==
          doctest::Approx(oracles::normal_cdf(x)).epsilon(1e-12));
    CHECK(model.xi_marginal_cdf(x) ==
          doctest::Approx(oracles::normal_cdf(x)).epsilon(1e-12));
  }
  // xi variance = kBT/a.
  SystemParams stiff(1, 1, Eigen::VectorXd::Ones(1), 1.0, 1.0, 1.0, 4.0);
  GibbsModel model2(pot, stiff);
  CHECK(model2.xi_marginal_cdf(1.0) ==
        doctest::Approx(oracles::normal_cdf(1.0, 0.0, 0.5)).epsilon(1e-12));
  // Normalization sanity: density integrates to ~1 over a wide box.
  const double z = oracles::simpson(
      [&](double q) {
        return std::exp(-0.5 * q * q);
      },
      -30.0, 30.0, 1e-10);
  const double grid = oracles::simpson(
      [&](double q) {
        Eigen::VectorXd qq(1);
        qq << q;
        return std::exp(-pot->value(qq));
      },
      -30.0, 30.0, 1e-10);
  CHECK(grid == doctest::Approx(z).epsilon(1e-9));
}

TEST_CASE("ks distance: worked cases") {
  // Samples at the quantile midpoints: distance <= 1/(2n).
  const int n = 100;
  std::vector<double> quantiles;
  for (int i = 0; i < n; ++i) {
    const double u = (i + 0.5) / n;
    // Standard normal quantile by bisection.
    double lo = -10, hi = 10;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (oracles::normal_cdf(mid) < u ? lo : hi) = mid;
    }
    quantiles.push_back(0.5 * (lo + hi));
  }
  CHECK(ks_distance(quantiles,
                    [](double x) { return oracles::normal_cdf(x); }) <=
        0.5 / n + 1e-12);

  // All samples at the median of a continuous law: distance 1/2.
  std::vector<double> at_median(50, 0.0);
  CHECK(ks_distance(at_median, [](double x) {
          return oracles::normal_cdf(x);
        }) == doctest::Approx(0.5).epsilon(1e-12));

  // A sample against its own empirical CDF: distance 0.
  std::vector<double> sample = {0.3, -1.2, 0.9, 2.4, -0.1, 0.3};
  std::vector<double> sorted = sample;
  std::sort(sorted.begin(), sorted.end());
  const auto empirical = [&](double x) {
    return static_cast<double>(
               std::upper_bound(sorted.begin(), sorted.end(), x) -
               sorted.begin()) /
           sorted.size();
  };
  CHECK(ks_distance(sample, empirical) == 0.0);

  CHECK_THROWS_AS(ks_distance({}, [](double) { return 0.5; }),
                  ContractViolation);
}

TEST_CASE("temperature estimate: exact Gibbs momenta recover kBT") {
  const auto params = unit_params();
  std::vector<State> states;
  Pcg64 rng(19);
  for (int i = 0; i < 40000; ++i) states.push_back(st(0.0, rng.normal(), 0.0));
  const auto traj = make_traj(states, 0.1);
  CHECK(temperature_estimate(traj, params) == doctest::Approx(1.0).epsilon(0.02));

  // All momenta zero.
  const auto zero = make_traj({st(0, 0, 0), st(0, 0, 0)});
  CHECK(temperature_estimate(zero, params) == 0.0);

  // Equipartition across unequal masses.
  SystemParams two(2, 1, (Eigen::VectorXd(2) << 1.0, 4.0).finished(), 1, 1, 1, 1);
  std::vector<State> states2;
  for (int i = 0; i < 60000; ++i) {
    State x;
    x.q = Eigen::VectorXd::Zero(2);
    x.p = Eigen::VectorXd(2);
    x.p << rng.normal() * 1.0, rng.normal() * 2.0;  // sigma_c = sqrt(m_c kBT)
    x.xi = 0.0;
    states2.push_back(x);
  }
  Trajectory traj2;
  for (std::size_t i = 0; i < states2.size(); ++i) {
    traj2.times.push_back(static_cast<double>(i));
    traj2.states.push_back(states2[i]);
    traj2.sum_w.push_back(0);
    traj2.sum_wkin.push_back(0);
    traj2.sum_warc.push_back(0);
    traj2.brownian_increments_consumed.push_back(0);
  }
  // Per-particle kinetic temperatures agree.
  double t0 = 0.0, t1 = 0.0;
  for (const auto& x : traj2.states) {
    t0 += x.p[0] * x.p[0] / 1.0;
    t1 += x.p[1] * x.p[1] / 4.0;
  }
  t0 /= traj2.states.size();
  t1 /= traj2.states.size();
  CHECK(t0 == doctest::Approx(1.0).epsilon(0.03));
  CHECK(t1 == doctest::Approx(1.0).epsilon(0.03));
  CHECK(temperature_estimate(traj2, two) == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("ergodic average: constants and moments") {
  const auto params = unit_params();
  std::vector<State> states;
  Pcg64 rng(43);
  for (int i = 0; i < 20000; ++i)
    states.push_back(st(rng.normal(), rng.normal(), 0.0));
  const auto traj = make_traj(states, 0.5);

  const auto constant = ergodic_average([](const State&) { return 3.25; }, traj);
  CHECK(constant.value == doctest::Approx(3.25).epsilon(1e-14));
  CHECK(constant.std_error == doctest::Approx(0.0).epsilon(1e-12));

  const auto second = ergodic_average(
      [&](const State& x) { return kinetic_norm_sq(x.p, params); }, traj);
  CHECK(second.value == doctest::Approx(1.0).epsilon(0.05));
  CHECK(std::abs(second.value - 1.0) < 4.0 * second.std_error + 0.01);

  CHECK_THROWS_AS(ergodic_average([](const State&) { return 0.0; },
                                  make_traj({st(0, 0, 0)})),
                  ContractViolation);
}

TEST_CASE("tv decay: identical, disjoint, and relabeled ensembles") {
  std::vector<State> cloud_a, cloud_b;
  Pcg64 rng(51);
  for (int i = 0; i < 2000; ++i) {
    cloud_a.push_back(st(rng.normal(), rng.normal(), 0.0));
    cloud_b.push_back(st(rng.normal() + 8.0, rng.normal(), 0.0));
  }
  // Identical ensembles: zero TV at every time.
  const auto same = tv_decay({cloud_a, cloud_a}, {cloud_a, cloud_a}, {0.0, 1.0});
  for (const auto& pt : same.series) CHECK(pt.tv == 0.0);

  // Disjoint deltas: TV = 1.
  std::vector<State> delta_a(1500, st(-3.0, 0.0, 0.0));
  std::vector<State> delta_b(1500, st(3.0, 0.0, 0.0));
  const auto apart = tv_decay({delta_a}, {delta_b}, {0.0});
  CHECK(apart.series[0].tv == doctest::Approx(1.0));

  // Symmetry in the two ensembles.
  const auto ab = tv_decay({cloud_a}, {cloud_b}, {0.0});
  const auto ba = tv_decay({cloud_b}, {cloud_a}, {0.0});
  CHECK(ab.series[0].tv == doctest::Approx(ba.series[0].tv).epsilon(1e-12));

  // Contract errors.
  CHECK_THROWS_AS(tv_decay({cloud_a}, {cloud_a, cloud_a}, {0.0, 1.0}),
                  ContractViolation);
  std::vector<State> short_b(cloud_b.begin(), cloud_b.begin() + 100);
  CHECK_THROWS_AS(tv_decay({cloud_a}, {short_b}, {0.0}), ContractViolation);
}

TEST_CASE("stationarity residual: discriminates the invariant density") {
  const auto params = unit_params();
  const auto pot = make_harmonic(1, 0.5);
  GibbsModel model(pot, params);
  const double good = stationarity_residual(model, 10, 1.0);
  CHECK(good < 1e-5);
  const double bad = stationarity_residual(model, 10, 2.0);
  CHECK(bad > 1e-2);

  const auto dw = make_double_well(1, 0.25, 0.5, 0.25);
  GibbsModel model2(dw, params);
  CHECK(stationarity_residual(model2, 10, 1.0) < 1e-5);
}

TEST_CASE("diagnostics report: json round trip fields") {
  DiagnosticsReport report;
  report.kinetic_temperature = 1.01;
  report.xi_mean = -0.003;
  report.xi_variance = 0.98;
  report.ks_q = 0.004;
  report.samples_used = 1234;
  CHECK(report.all_finite());
  const std::string text = report.to_json();
  CHECK(text.find("kinetic_temperature") != std::string::npos);
  CHECK(text.find("ks_q") != std::string::npos);
  report.xi_variance = std::nan("");
  CHECK(!report.all_finite());
}
