#include "support/oracles.hpp"

#include <cmath>

namespace oracles {

namespace {

double simpson_rec(const std::function<double(double)>& f, double a,
                   double fa, double b, double fb, double fm, double whole,
                   double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
    return left + right + delta / 15.0;
  return simpson_rec(f, a, fa, m, fm, flm, left, 0.5 * tol, depth - 1) +
         simpson_rec(f, m, fm, b, fb, frm, right, 0.5 * tol, depth - 1);
}

}  // namespace

double simpson(const std::function<double(double)>& f, double a, double b,
               double tol, int depth) {
  if (a == b) return 0.0;
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_rec(f, a, fa, b, fb, fm, whole, tol, depth);
}

double dawson(double z) {
  const double sign = (z < 0.0) ? -1.0 : 1.0;
  const double x = std::abs(z);
  if (x == 0.0) return 0.0;
  // exp(u^2 - x^2) = exp(u (u - 2x) ... ) stays in (0, 1] on [0, x].
  const double val = simpson(
      [x](double u) { return std::exp(u * (u - 2.0 * x)); }, 0.0, x, 1e-15);
  return sign * val;
}

double f_unit(double z) {
  const double x = std::abs(z);
  return simpson([](double y) { return dawson(y); }, 0.0, x, 1e-12);
}

double central_diff(const std::function<double(double)>& f, double x,
                    double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

double richardson_diff(const std::function<double(double)>& f, double x,
                       double h) {
  const double d1 = central_diff(f, x, h);
  const double d2 = central_diff(f, x, 0.5 * h);
  return (4.0 * d2 - d1) / 3.0;
}

double normal_cdf(double x, double mean, double sigma) {
  return 0.5 * std::erfc(-(x - mean) / (sigma * std::sqrt(2.0)));
}

}  // namespace oracles
