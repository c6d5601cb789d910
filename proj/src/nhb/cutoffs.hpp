#pragma once

namespace nhb {

/// C-infinity step: 0 for t <= 0, 1 for t >= 1, built from exp(-1/t).
/// Its slope attains the maximum value 2 at t = 1/2.
struct SmoothStep {
  static double value(double t);
  static double deriv(double t);
};

/// The cutoff family used by the Lyapunov perturbations.  Each member is
/// C-infinity with values in [0, 1] and the plateau layout:
///   f0: 1 on (-inf, -1], 0 on [0, inf), f0' <= 0, |f0'| <= 2
///   f1: 1 on y <= K*, 0 on y >= K*+1
///   f2: 1 on |y| <= 1, 0 on |y| >= 2
///   f3: 1 on |y| >= 2, 0 on |y| <= 1   (f2 + f3 = 1)
///   h1: 1 on y <= -xi*-1, 0 on y >= -xi*, |h1'| <= 2
///   h2 = f2
///   h3: 1 on |y| <= 3, 0 on |y| >= 4
class CutoffSet {
 public:
  CutoffSet(double k_star, double xi_star);

  double f0(double y) const;
  double f0_deriv(double y) const;
  double f1(double y) const;
  double f2(double y) const;
  double f3(double y) const;
  double h1(double y) const;
  double h2(double y) const { return f2(y); }
  double h3(double y) const;

  double k_star() const { return k_star_; }
  double xi_star() const { return xi_star_; }

 private:
  double k_star_;
  double xi_star_;
};

}  // namespace nhb
