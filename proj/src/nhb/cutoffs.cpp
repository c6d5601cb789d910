#include "nhb/cutoffs.hpp"

#include <cmath>

namespace nhb {

namespace {
inline double bump(double t) { return (t > 0.0) ? std::exp(-1.0 / t) : 0.0; }
inline double bump_deriv(double t) {
  return (t > 0.0) ? std::exp(-1.0 / t) / (t * t) : 0.0;
}
}  // namespace

double SmoothStep::value(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  const double a = bump(t);
  const double b = bump(1.0 - t);
  return a / (a + b);
}

double SmoothStep::deriv(double t) {
  if (t <= 0.0 || t >= 1.0) return 0.0;
  const double a = bump(t);
  const double b = bump(1.0 - t);
  const double da = bump_deriv(t);
  const double db = -bump_deriv(1.0 - t);
  const double denom = a + b;
  return (da * b - a * db) / (denom * denom);
}

CutoffSet::CutoffSet(double k_star, double xi_star)
    : k_star_(k_star), xi_star_(xi_star) {}

double CutoffSet::f0(double y) const { return SmoothStep::value(-y); }

double CutoffSet::f0_deriv(double y) const { return -SmoothStep::deriv(-y); }

double CutoffSet::f1(double y) const {
  return 1.0 - SmoothStep::value(y - k_star_);
}

double CutoffSet::f2(double y) const {
  return 1.0 - SmoothStep::value(std::abs(y) - 1.0);
}

double CutoffSet::f3(double y) const {
  return SmoothStep::value(std::abs(y) - 1.0);
}

double CutoffSet::h1(double y) const {
  return 1.0 - SmoothStep::value(y + xi_star_ + 1.0);
}

double CutoffSet::h3(double y) const {
  return 1.0 - SmoothStep::value(std::abs(y) - 3.0);
}

}  // namespace nhb
