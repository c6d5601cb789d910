#include <doctest.h>

#include <cmath>

#include "nhb/cutoffs.hpp"
#include "support/oracles.hpp"

using namespace nhb;

TEST_CASE("smooth step: plateaus and range") {
  CHECK(SmoothStep::value(-0.5) == 0.0);
  CHECK(SmoothStep::value(0.0) == 0.0);
  CHECK(SmoothStep::value(1.0) == 1.0);
  CHECK(SmoothStep::value(2.0) == 1.0);
  for (double t = -0.2; t <= 1.2; t += 1e-3) {
    const double v = SmoothStep::value(t);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("smooth step: derivative matches finite differences") {
  for (double t = 0.05; t < 1.0; t += 0.01) {
    const double fd = oracles::richardson_diff(
        [](double x) { return SmoothStep::value(x); }, t, 1e-5);
    CHECK(std::abs(SmoothStep::deriv(t) - fd) < 1e-8);
  }
}

TEST_CASE("cutoffs: plateau layout") {
  const CutoffSet cut(7.15, 10.0);
  CHECK(cut.f0(-1.0) == 1.0);
  CHECK(cut.f0(-2.0) == 1.0);
  CHECK(cut.f0(0.0) == 0.0);
  CHECK(cut.f0(1.0) == 0.0);
  CHECK(cut.f1(7.15) == 1.0);
  CHECK(cut.f1(0.0) == 1.0);
  CHECK(cut.f1(8.15) == 0.0);
  CHECK(cut.f2(0.5) == 1.0);
  CHECK(cut.f2(-1.0) == 1.0);
  CHECK(cut.f2(2.0) == 0.0);
  CHECK(cut.f3(2.0) == 1.0);
  CHECK(cut.f3(1.0) == 0.0);
  CHECK(cut.h1(-11.0) == 1.0);
  CHECK(cut.h1(-10.0) == 0.0);
  CHECK(cut.h3(3.0) == 1.0);
  CHECK(cut.h3(4.0) == 0.0);
  CHECK(cut.h2(0.3) == cut.f2(0.3));
}

TEST_CASE("cutoffs: values in [0,1] and f2 + f3 = 1") {
  const CutoffSet cut(5.0, 8.0);
  for (double y = -15.0; y <= 15.0; y += 1e-3) {
    for (double v : {cut.f0(y), cut.f1(y), cut.f2(y), cut.f3(y), cut.h1(y),
                     cut.h3(y)}) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
    CHECK(cut.f2(y) + cut.f3(y) == doctest::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("cutoffs: slope bounds |f0'| <= 2 and |h1'| <= 2") {
  const CutoffSet cut(5.0, 8.0);
  double max_f0 = 0.0, max_h1 = 0.0;
  for (int i = 0; i <= 40000; ++i) {
    const double y = -12.0 + 24.0 * i / 40000.0;
    max_f0 = std::max(max_f0, std::abs(cut.f0_deriv(y)));
    const double h1d = oracles::central_diff(
        [&](double v) { return cut.h1(v); }, y, 1e-6);
    max_h1 = std::max(max_h1, std::abs(h1d));
  }
  CHECK(max_f0 <= 2.0 + 1e-9);
  CHECK(max_h1 <= 2.0 + 1e-6);
  CHECK(max_f0 > 1.5);  // the bound is tight, not vacuous
}

TEST_CASE("cutoffs: f0 is nonincreasing") {
  const CutoffSet cut(5.0, 8.0);
  for (double y = -2.0; y <= 1.0; y += 1e-3)
    CHECK(cut.f0_deriv(y) <= 1e-15);
}

TEST_CASE("cutoffs: twice differentiable at plateau edges") {
  // Second differences stay bounded and tend to 0 approaching the seams,
  // as they must for C2 cutoffs built from exp(-1/t).
  const CutoffSet cut(5.0, 8.0);
  for (double eps : {1e-2, 1e-3}) {
    for (double seam : {0.0, -1.0}) {
      const double inside = seam + ((seam == 0.0) ? -eps : eps);
      const double d2 = (cut.f0(inside + 1e-4) - 2.0 * cut.f0(inside) +
                         cut.f0(inside - 1e-4)) /
                        1e-8;
      CHECK(std::isfinite(d2));
    }
  }
  // Derivative approaches 0 at both seams.
  CHECK(std::abs(cut.f0_deriv(-1e-7)) < 1e-3);
  CHECK(std::abs(cut.f0_deriv(-1.0 + 1e-7)) < 1e-3);
}
