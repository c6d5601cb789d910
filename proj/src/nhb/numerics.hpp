#pragma once

#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace nhb {

using ScalarFn = std::function<double(double)>;

/// Result of a bracketed scalar minimization.
struct MinResult {
  double x;
  double value;
  int iterations;
};

/// Brent's method (golden section + successive parabolic interpolation)
/// for minimizing f on [a, b].  `tol` is the absolute x-tolerance.
MinResult brent_minimize(const ScalarFn& f, double a, double b,
                         double tol = 1e-12, int max_iter = 200);

/// Brent-style root bracketing solver on [a, b]; requires a sign change.
double brent_root(const ScalarFn& f, double a, double b, double tol = 1e-13,
                  int max_iter = 200);

/// Adaptive Simpson quadrature of f over [a, b] to absolute tolerance.
double adaptive_simpson(const ScalarFn& f, double a, double b,
                        double tol = 1e-12, int max_depth = 40);

/// Gauss-Legendre nodes/weights on [-1, 1], computed by Newton iteration.
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
const GaussRule& gauss_legendre(int n);

/// Integrate f over [a, b] with an n-point Gauss-Legendre rule split into
/// `panels` equal panels.
double gauss_panel_integrate(const ScalarFn& f, double a, double b, int n,
                             int panels);

/// Chebyshev interpolant of a smooth function on [a, b].
class ChebyshevFit {
 public:
  ChebyshevFit() = default;
  ChebyshevFit(const ScalarFn& f, double a, double b, int degree);
  double operator()(double x) const;
  int degree() const { return static_cast<int>(coef_.size()) - 1; }

 private:
  double a_ = 0.0, b_ = 1.0;
  std::vector<double> coef_;
};

/// Richardson-extrapolated central first difference.
double richardson_d1(const ScalarFn& f, double x, double h);

/// Richardson-extrapolated central second difference.
double richardson_d2(const ScalarFn& f, double x, double h);

/// Step-size heuristics for differentiating along a coordinate of size |x|.
double fd_step_first(double x);
double fd_step_second(double x);

/// log(sum_i exp(v_i)) without overflow; -inf for an empty span.
double log_sum_exp(std::span<const double> v);

/// FNV-1a 64-bit hash of a byte string, as fixed-width lowercase hex.
std::string fnv1a64_hex(std::string_view bytes);

}  // namespace nhb
