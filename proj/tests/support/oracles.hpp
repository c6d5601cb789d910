#pragma once

// Independent oracles for the test suites.  Everything here is computed by
// routines separate from the library's own implementation paths: plain
// recursive Simpson quadrature and naive finite differences.

#include <functional>

namespace oracles {

/// Recursive-Simpson quadrature, written independently of the library.
double simpson(const std::function<double(double)>& f, double a, double b,
               double tol = 1e-13, int depth = 48);

/// Dawson's integral via the overflow-free form
///   D(z) = int_0^z exp(u (u - 2 z)) du  (odd in z).
double dawson(double z);

/// int_0^z D(y) dy by quadrature of the Dawson oracle.
double f_unit(double z);

/// Plain central difference (no Richardson), for cross-validation.
double central_diff(const std::function<double(double)>& f, double x,
                    double h);

/// Richardson-extrapolated central difference, written independently.
double richardson_diff(const std::function<double(double)>& f, double x,
                       double h);

/// Standard normal CDF.
double normal_cdf(double x, double mean = 0.0, double sigma = 1.0);

}  // namespace oracles
