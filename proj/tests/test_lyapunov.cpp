#include <doctest.h>

#include <cmath>

#include "nhb/lyapunov.hpp"
#include "nhb/rng.hpp"
#include "nhb/specfun.hpp"

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

// The worked parameter set for beta = gamma = a = m = 1:
// alpha = 1, beta0 = 0.2, eps0 = 0.06 gives delta = 0.02, eps = 0.01,
// alpha1 = 2.86, K* = 7.15.
LyapunovParams worked_lp(double p_star = 16.0, double u_star = 2048.0,
                         double xi_star = 10.0) {
  LyapunovParams lp;
  lp.beta0 = 0.2;
  lp.eps0 = 0.06;
  lp.delta = 0.02;
  lp.alpha = 1.0;
  lp.alpha1 = 2.86;
  lp.alpha2 = 1.0 / (4.0 * specfun::dawson_max().d_max *
                     specfun::dawson_max().d_max);
  lp.k_star = 7.15;
  lp.p_star = p_star;
  lp.u_star = u_star;
  lp.xi_star = xi_star;
  lp.k1 = 1.0;
  return lp;
}

State random_state(Pcg64& rng, double qb = 3.0, double pb = 3.0,
                   double xb = 4.0) {
  return st(rng.uniform(-qb, qb), rng.uniform(-pb, pb), rng.uniform(-xb, xb));
}

}  // namespace

TEST_CASE("lyapunov params: structural validation") {
  const auto params = unit_params();
  auto lp = worked_lp();
  CHECK_NOTHROW(lp.validate(params));
  auto bad = lp;
  bad.beta0 = 0.5;  // >= beta* = 0.427
  CHECK_THROWS_AS(bad.validate(params), ConfigError);
  bad = lp;
  bad.xi_star = 3.5;  // <= 3 gamma/m + 1
  CHECK_THROWS_AS(bad.validate(params), ConfigError);
  bad = lp;
  bad.delta = 0.05;  // > eps0/3
  CHECK_THROWS_AS(bad.validate(params), ConfigError);
}

TEST_CASE("psi0: plateau values and global bound") {
  const auto params = unit_params();
  auto lp = worked_lp();
  CHECK(psi0(st(0.0, 0.0, 1.0), lp, params) == 0.0);
  lp.delta = 0.1;
  CHECK(psi0(st(0.0, 0.0, -2.0), lp, params) == doctest::Approx(0.2));

  const auto pot = make_double_well(1, 0.25, 0.5, 0.25);
  lp = worked_lp();
  Pcg64 rng(3);
  for (int i = 0; i < 10000; ++i) {
    const State x = random_state(rng, 4.0, 5.0, 6.0);
    const double h = hamiltonian(x, *pot, params);
    CHECK(std::abs(psi0(x, lp, params)) <= lp.delta * h + 1e-15);
  }
}

TEST_CASE("psi0: analytic xi-derivative") {
  const auto params = unit_params();
  const auto lp = worked_lp();
  for (double xi : {-2.0, -1.2, -0.7, -0.3, -0.01, 0.5}) {
    const double fd = [&] {
      const double h = 1e-6;
      const auto f = [&](double v) { return psi0(st(0, 0, v), lp, params); };
      return (f(xi + h) - f(xi - h)) / (2.0 * h);
    }();
    CHECK(std::abs(psi0_dxi(st(0, 0, xi), lp, params) - fd) < 1e-7);
  }
}

TEST_CASE("psi1: branch and cutoff behavior") {
  const auto params = unit_params();
  const auto lp = worked_lp();
  const auto pot = make_double_well(1, 0.25, 0.5, 0.25);

  // Small gradient branch: |U'(q)|^2 < U*/2 forces 0.
  CHECK(psi1(st(0.1, 1.0, 0.0), *pot, lp, params) == 0.0);
  // f1 kills g1 above K* + 1.
  CHECK(psi1(st(6.0, 0.5, lp.k_star + 1.5), *pot, lp, params) == 0.0);

  // Saturated cutoffs: psi1 = alpha1 sqrt(xi^2+1) p/U'.
  const double q = 6.0;  // U' = q^3 - q = 210; U'^2 = 44100 >> 2 U* (xi^2+1)
  const double xi = -2.0;
  const double p = 0.5;
  const double uprime = q * q * q - q;
  REQUIRE(uprime * uprime > 2.0 * lp.u_star * (xi * xi + 1.0));
  REQUIRE(p * p < lp.p_star * std::sqrt(xi * xi + 1.0));
  const double expected = lp.alpha1 * std::sqrt(xi * xi + 1.0) * p / uprime;
  CHECK(psi1(st(q, p, xi), *pot, lp, params) == doctest::Approx(expected).epsilon(1e-13));
}

TEST_CASE("psi2: support and center value") {
  const auto params = unit_params();
  const auto lp = worked_lp();
  const auto pot = make_double_well(1, 0.25, 0.5, 0.25);

  // h1 kills g2 for xi > -xi*.
  CHECK(psi2(st(1.0, 0.1, -lp.xi_star + 0.5), *pot, lp, params) == 0.0);
  CHECK(psi2(st(1.0, 0.1, 0.0), *pot, lp, params) == 0.0);

  // p = U' = 0 deep in the g2 plateau: F(0) = 0 termwise.
  const double xi = -lp.xi_star - 3.0;
  CHECK(psi2(st(1.0, 0.0, xi), *pot, lp, params) == doctest::Approx(0.0));

  // |psi2| <= eps H on a sweep (the budget eps = eps0/6 = 0.01 for the
  // worked parameters, xi* large enough).
  auto lp_big = worked_lp(16.0, 2048.0, 40.0);
  Pcg64 rng(7);
  int checked = 0;
  while (checked < 10000) {
    const State x = st(rng.uniform(-6.0, 6.0), rng.uniform(-8.0, 8.0),
                       rng.uniform(-90.0, -40.0));
    const double h = hamiltonian(x, *pot, params);
    const double v = psi2(x, *pot, lp_big, params);
    CHECK(std::abs(v) <= 0.01 * h);
    ++checked;
  }
}

TEST_CASE("psi1/psi2: smooth across their branch seams") {
  const auto params = unit_params();
  const auto lp = worked_lp();
  const auto pot = make_double_well(1, 0.25, 0.5, 0.25);

  // psi1 seam: |U'(q)|^2 = U*/2.  Both branches vanish nearby, so the
  // one-sided differences agree (and are 0).
  const double target = std::sqrt(lp.u_star / 2.0);
  // Solve q^3 - q = target by bisection on [1, 4].
  double lo = 1.0, hi = 4.0;
  for (int i = 0; i < 100; ++i) {
    const double mid = 0.5 * (lo + hi);
    (mid * mid * mid - mid < target ? lo : hi) = mid;
  }
  const double q_seam = 0.5 * (lo + hi);
  const double h = 1e-5;
  const auto f = [&](double q) { return psi1(st(q, 0.7, 0.3), *pot, lp, params); };
  const double left = (f(q_seam) - f(q_seam - h)) / h;
  const double right = (f(q_seam + h) - f(q_seam)) / h;
  CHECK(std::abs(left - right) < 1e-6);
  CHECK(std::abs(left) < 1e-6);

  // psi2 seam: xi = -3 gamma/m.  g2 vanishes in a neighborhood.
  const auto g = [&](double xi) { return psi2(st(1.0, 0.5, xi), *pot, lp, params); };
  const double seam = -3.0;
  const double gl = (g(seam) - g(seam - h)) / h;
  const double gr = (g(seam + h) - g(seam)) / h;
  CHECK(std::abs(gl - gr) < 1e-6);
}

TEST_CASE("V and W: plateau region, positivity, sandwich") {
  const auto params = unit_params();
  const auto lp = worked_lp();
  const auto pot = make_double_well(1, 0.25, 0.5, 0.25);

  // xi in (0, K*), small p, small gradient: every perturbation vanishes.
  const State x = st(0.9, 0.3, 1.5);
  const auto vw = V_and_W(x, *pot, lp, params);
  const double h = hamiltonian(x, *pot, params);
  CHECK(vw.v == doctest::Approx(lp.beta0 * h).epsilon(1e-14));
  CHECK(vw.w == doctest::Approx(std::exp(lp.beta0 * h)).epsilon(1e-14));
  CHECK(!vw.overflowed);

  Pcg64 rng(13);
  for (int i = 0; i < 10000; ++i) {
    const State y = random_state(rng, 5.0, 6.0, 8.0);
    const auto r = V_and_W(y, *pot, lp, params);
    const double hy = hamiltonian(y, *pot, params);
    CHECK(r.w > 0.0);
    CHECK(r.v >= (lp.beta0 - lp.eps0) * hy - 1e-12);
    CHECK(r.v <= (lp.beta0 + lp.eps0) * hy + 1e-12);
    CHECK(std::abs(psi0(y, lp, params) + psi12(y, *pot, lp, params)) <=
          lp.eps0 * hy + 1e-12);
  }

  // Overflow handling: the log-space value stays finite and flagged.
  const auto huge = V_and_W(st(90.0, 0.0, 0.0), *pot, lp, params);
  CHECK(std::isfinite(huge.v));
  CHECK(huge.overflowed);
  CHECK(std::isinf(huge.w));
}

TEST_CASE("generator: closed form for H and annihilation of constants") {
  const auto params = unit_params();
  const auto pot_h = make_harmonic(1, 0.5);
  const auto pot_dw = make_double_well(1, 0.25, 0.5, 0.25);

  // Worked value: N=k=1, m=gamma=kBT=a=1, x=(0,1,2).
  const State x0 = st(0.0, 1.0, 2.0);
  CHECK(generator_hamiltonian_closed_form(x0, params) == doctest::Approx(-2.0));
  const double lh = generator_apply(
      [&](const State& s) { return hamiltonian(s, *pot_h, params); }, x0,
      *pot_h, params);
  CHECK(lh == doctest::Approx(-2.0).epsilon(1e-6));

  // Constants are annihilated.
  const double lc = generator_apply([](const State&) { return 4.25; }, x0,
                                    *pot_h, params);
  CHECK(std::abs(lc) < 1e-9);

  // Closed form vs numeric generator at random states, both potentials.
  Pcg64 rng(29);
  for (const auto& pot : {pot_h, pot_dw}) {
    for (int i = 0; i < 1000; ++i) {
      const State x = random_state(rng);
      const double numeric = generator_apply(
          [&](const State& s) { return hamiltonian(s, *pot, params); }, x,
          *pot, params);
      const double closed = generator_hamiltonian_closed_form(x, params);
      CHECK(std::abs(numeric - closed) <=
            1e-6 * std::max(1.0, std::abs(closed)));
    }
  }
}

TEST_CASE("generator: analytic H derivatives reproduce the closed form") {
  const auto params = unit_params();
  const auto pot = make_double_well(1, 0.25, 0.5, 0.25);
  Pcg64 rng(31);
  for (int i = 0; i < 1000; ++i) {
    const State x = random_state(rng);
    const auto d = hamiltonian_derivs(x, *pot, params);
    const double assembled = apply_generator(d, x, *pot, params);
    const double closed = generator_hamiltonian_closed_form(x, params);
    CHECK(std::abs(assembled - closed) <= 1e-12 * std::max(1.0, std::abs(closed)));
  }
}

TEST_CASE("generator: operator split sums to the full generator") {
  const auto params = unit_params();
  const auto pot = make_double_well(1, 0.25, 0.5, 0.25);
  Pcg64 rng(37);
  for (int i = 0; i < 1000; ++i) {
    const State x = random_state(rng);
    const auto d = hamiltonian_derivs(x, *pot, params);
    const double whole = apply_generator(d, x, *pot, params);
    const double sum = apply_t1(d, x, params) + apply_a(d, x, *pot, params) +
                       apply_t2(d, x, params);
    CHECK(std::abs(whole - sum) <= 1e-10 * std::max(1.0, std::abs(whole)));
  }
}

TEST_CASE("drift ratio: plateau closed form and the K* case") {
  const auto params = unit_params();
  const auto lp = worked_lp();
  const auto pot_h = make_harmonic(1, 0.5);

  // In the region where every psi vanishes identically:
  // drift = beta0 L H + beta0^2 (gamma/beta) sum (p_i/m_i)^2.
  const State x = st(0.4, 0.6, 1.2);
  REQUIRE(psi0(x, lp, params) == 0.0);
  REQUIRE(psi12(x, *pot_h, lp, params) == 0.0);
  const double expected = lp.beta0 * generator_hamiltonian_closed_form(x, params) +
                          lp.beta0 * lp.beta0 * x.p[0] * x.p[0];
  CHECK(drift_ratio(x, *pot_h, lp, params) ==
        doctest::Approx(expected).epsilon(1e-9));

  // x = (0, 0, K* + 2): the proof's xi >= K* case gives <= -alpha.
  const State top = st(0.0, 0.0, lp.k_star + 2.0);
  const double drift = drift_ratio(top, *pot_h, lp, params);
  CHECK(drift == doctest::Approx(0.2 * (-(lp.k_star + 2.0) + 1.0)).epsilon(1e-9));
  CHECK(drift <= -lp.alpha);
}

TEST_CASE("drift ratio: exponential-form identity against generator(W)/W") {
  const auto params = unit_params();
  const auto lp = worked_lp();
  const auto pot = make_double_well(1, 0.25, 0.5, 0.25);
  Pcg64 rng(41);
  double worst = 0.0;
  const auto check_at = [&](const State& x) {
    const double direct = drift_ratio(x, *pot, lp, params);
    const double via_w = generator_apply(
                             [&](const State& s) {
                               return V_and_W(s, *pot, lp, params).w;
                             },
                             x, *pot, params) /
                         V_and_W(x, *pot, lp, params).w;
    const double err =
        std::abs(direct - via_w) / std::max(1.0, std::abs(direct));
    worst = std::max(worst, err);
    CHECK(err < 1e-5);
  };
  // A block through the psi1-active strip and one deep in psi2 territory,
  // plus generic moderate states.
  for (int i = 0; i < 400; ++i)
    check_at(st(rng.uniform(-6.5, 6.5), rng.uniform(-3.0, 3.0),
                rng.uniform(-3.0, 3.0)));
  for (int i = 0; i < 300; ++i)
    check_at(st(rng.uniform(-2.0, 2.0), rng.uniform(-3.0, 3.0),
                rng.uniform(-16.0, -11.0)));
  for (int i = 0; i < 300; ++i) check_at(random_state(rng, 3.5, 3.5, 5.0));
  CHECK(worst < 1e-5);
}

TEST_CASE("drift ratio: numeric psi1 gradient matches the analytic one in the plateau") {
  const auto params = unit_params();
  const auto lp = worked_lp();
  const auto pot = make_double_well(1, 0.25, 0.5, 0.25);
  // Saturated cutoffs at q=6, xi=-2, p=0.5 (checked in the psi1 case above).
  const State x = st(6.0, 0.5, -2.0);
  const auto numeric = numeric_field_derivs(
      [&](const State& s) { return psi1(s, *pot, lp, params); }, x);
  const double uprime = pot->gradient(x.q)[0];
  const double u2 = pot->hessian(x.q)(0, 0);
  const double root = std::sqrt(x.xi * x.xi + 1.0);
  const double dp = lp.alpha1 * root / uprime;
  const double dxi = lp.alpha1 * x.xi / root * x.p[0] / uprime;
  // For scalar q: d/dq [p/U'] = -p U''/U'^2.
  const double dq_scalar = -lp.alpha1 * root * x.p[0] * u2 / (uprime * uprime);
  CHECK(std::abs(numeric.dp[0] - dp) < 1e-6 * std::max(1.0, std::abs(dp)));
  CHECK(std::abs(numeric.dxi - dxi) < 1e-6 * std::max(1.0, std::abs(dxi)));
  CHECK(std::abs(numeric.dq[0] - dq_scalar) <
        1e-6 * std::max(1.0, std::abs(dq_scalar)));
  CHECK(std::abs(numeric.lap_p) < 1e-6);  // psi1 is linear in p here
}

TEST_CASE("select_params: the worked example") {
  const auto params = unit_params();
  const auto pot = make_double_well(1, 0.25, 0.5, 0.25);
  SelectOptions opts;
  opts.max_rounds = 0;  // closed-form part only
  const auto sel = select_params(1.0, 0.2, 0.06, *pot, params, opts);
  CHECK(sel.lp.delta == doctest::Approx(0.02).epsilon(1e-12));
  CHECK(sel.lp.alpha1 == doctest::Approx(2.86).epsilon(1e-12));
  CHECK(sel.lp.alpha2 == doctest::Approx(0.854030).epsilon(1e-5));
  CHECK(sel.lp.k_star == doctest::Approx(7.15).epsilon(1e-12));
  CHECK(sel.lp.k1 == doctest::Approx(1.0));

  // alpha2 = 1/(4 Dmax^2) never depends on the other inputs.
  const auto sel2 = select_params(3.0, 0.3, 0.1, *pot, params, opts);
  CHECK(sel2.lp.alpha2 == doctest::Approx(sel.lp.alpha2).epsilon(1e-15));

  // beta0 >= beta* is rejected, citing the threshold.
  CHECK_THROWS_AS(select_params(1.0, 0.5, 0.06, *pot, params, opts),
                  ConfigError);
  try {
    select_params(1.0, 0.5, 0.06, *pot, params, opts);
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("beta*") != std::string::npos);
    CHECK(msg.find("0.427") != std::string::npos);
  }
}

TEST_CASE("drift certification: double-well smoke run") {
  const auto params = unit_params();
  const auto pot = make_double_well(1, 0.25, 0.5, 0.25);
  SelectOptions opts;
  opts.escalation_samples = 4000;
  opts.final_samples = 8000;
  const auto sel = select_params(1.0, 0.2, 0.06, *pot, params, opts);
  REQUIRE(sel.report.pass);
  CHECK(sel.report.violations == 0);
  CHECK(sel.report.sandwich_violations == 0);
  CHECK(sel.report.regions[0].count > 0);  // R0
  CHECK(sel.report.regions[1].count > 0);  // R1
  CHECK(sel.report.regions[2].count > 0);  // R2
  CHECK(sel.report.max_drift_ratio <= -sel.lp.alpha);
  CHECK(std::isfinite(sel.report.log_k));
  CHECK(sel.report.shell_hi == doctest::Approx(10.0 * sel.report.shell_lo));

  // Shell inside the compact set: no failure, K reported positive.
  const auto inside = drift_certify(*pot, sel.lp, params, 1.0, 5.0, 2000, 7);
  CHECK(inside.compact_samples > 0);
  CHECK(std::isfinite(inside.log_k));
}
