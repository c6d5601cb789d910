#include "nhb/specfun.hpp"

#include <cmath>
#include <mutex>

#include "nhb/errors.hpp"
#include "nhb/numerics.hpp"

namespace nhb::specfun {

namespace {

// Maclaurin series: D(z) = sum_n (-1)^n 2^n z^(2n+1) / (1*3*...*(2n+1)).
// Well conditioned for |z| <= 1.
double dawson_series(double z) {
  const double z2 = z * z;
  double term = z;
  double sum = z;
  for (int n = 1; n < 60; ++n) {
    term *= -2.0 * z2 / (2.0 * n + 1.0);
    sum += term;
    if (std::abs(term) < 1e-18 * std::abs(sum)) break;
  }
  return sum;
}

// Midrange: sampled-Gaussian expansion
//   D(z) ~ (1/sqrt(pi)) sum_{n odd} exp(-(z - n h)^2) / n,
// whose error is O(exp(-pi^2/(4 h^2))); h = 0.2 puts that near 1e-27,
// far below double rounding.
double dawson_sampled(double z) {
  constexpr double h = 0.2;
  constexpr double cut = 8.5;  // exp(-72) ~ 5e-32
  const double sign = (z < 0.0) ? -1.0 : 1.0;
  const double x = std::abs(z);
  const long n_center = std::lround(x / h);
  const long n0 = (n_center % 2 == 0) ? n_center + 1 : n_center;
  double sum = 0.0;
  for (long n = n0; n * h < x + cut; n += 2) {
    const double d = x - n * h;
    sum += std::exp(-d * d) / n;
  }
  for (long n = n0 - 2; n * h > x - cut; n -= 2) {
    const double d = x - n * h;
    sum += std::exp(-d * d) / n;  // n may be negative: signed contribution
  }
  return sign * sum / std::sqrt(M_PI);
}

// Large |z|: asymptotic series D(z) ~ sum_k (2k-1)!! / (2^(k+1) z^(2k+1)).
double dawson_asymptotic(double z) {
  const double inv2 = 1.0 / (z * z);
  double term = 1.0 / (2.0 * z);
  double sum = term;
  for (int k = 1; k < 20; ++k) {
    term *= (2.0 * k - 1.0) * 0.5 * inv2;
    const double next = sum + term;
    if (next == sum) break;
    sum = next;
  }
  return sum;
}

}  // namespace

double dawson(double z) {
  if (!std::isfinite(z)) throw ContractViolation("dawson: non-finite argument");
  const double a = std::abs(z);
  if (a <= 1.0) return dawson_series(z);
  if (a < 10.0) return dawson_sampled(z);
  return dawson_asymptotic(z);
}

double dawson_derivative(double z) { return 1.0 - 2.0 * z * dawson(z); }

DawsonMax dawson_max() {
  static std::once_flag once;
  static DawsonMax cached;
  std::call_once(once, [] {
    // D increases from 0 and decays like 1/(2z); the maximum lies in
    // [0.5, 1.5].  Bracketed maximization gets within ~sqrt(eps) of the
    // argmax; Newton on the stationarity condition D'(z) = 1 - 2 z D(z) = 0
    // then pins it to machine precision (the root is simple: the slope
    // there is -2 D_max).
    const auto res =
        brent_minimize([](double z) { return -dawson(z); }, 0.5, 1.5, 1e-10);
    double z = res.x;
    for (int it = 0; it < 8; ++it) {
      const double d = dawson(z);
      const double g = 1.0 - 2.0 * z * d;
      const double dg = -2.0 * d - 2.0 * z * (1.0 - 2.0 * z * d);
      const double step = g / dg;
      z -= step;
      if (std::abs(step) < 1e-15 * z) break;
    }
    cached.z_star = z;
    cached.d_max = dawson(z);
  });
  return cached;
}

double beta_star_of(double beta) {
  const DawsonMax dm = dawson_max();
  return beta / (8.0 * dm.d_max * dm.d_max);
}

double beta_star(const SystemParams& params) {
  return beta_star_of(params.beta());
}

namespace {

constexpr double kFUnitCross = 10.0;

const ChebyshevFit& f_unit_table() {
  static std::once_flag once;
  static ChebyshevFit fit;
  std::call_once(once, [] {
    // f_unit on [0, cross] by panelled Gauss-Legendre of dawson; the
    // integrand is entire, so 16 panels x 40 nodes is beyond double
    // precision already.
    fit = ChebyshevFit(
        [](double z) {
          return gauss_panel_integrate([](double y) { return dawson(y); }, 0.0,
                                       z, 40, 16);
        },
        0.0, kFUnitCross, 80);
  });
  return fit;
}

}  // namespace

double f_unit_asymptotic_constant() {
  // lim_(z->inf) of int_0^z D - log(z)/2, which evaluates to
  // (euler_gamma + 2 log 2)/4; cross-checked against quadrature in tests.
  constexpr double kEulerGamma = 0.57721566490153286061;
  return 0.25 * (kEulerGamma + 2.0 * std::log(2.0));
}

double f_unit(double z) {
  if (!std::isfinite(z)) throw ContractViolation("f_unit: non-finite argument");
  const double a = std::abs(z);
  // Series for tiny arguments: D(y) = y - 2y^3/3 + ..., so the integral is
  // a^2/2 - a^4/6 + ...; the Chebyshev table only carries absolute accuracy.
  if (a < 1e-4) return 0.5 * a * a - a * a * a * a / 6.0;
  if (a <= kFUnitCross) return f_unit_table()(a);
  // Termwise integral of the Dawson asymptotic series.
  const double inv2 = 1.0 / (a * a);
  const double corr = inv2 * (1.0 / 8.0 +
                      inv2 * (3.0 / 32.0 +
                      inv2 * (5.0 / 32.0 +
                      inv2 * (105.0 / 256.0 +
                      inv2 * (945.0 / 640.0)))));
  return 0.5 * std::log(a) + f_unit_asymptotic_constant() - corr;
}

}  // namespace nhb::specfun
