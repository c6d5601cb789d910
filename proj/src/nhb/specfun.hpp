#pragma once

#include "nhb/model.hpp"

namespace nhb::specfun {

/// Location and value of the maximum of Dawson's integral.
struct DawsonMax {
  double z_star;  // argmax, > 0
  double d_max;   // D(z_star)
};

/// Dawson's integral D(z) = exp(-z^2) * int_0^z exp(y^2) dy.
/// Absolute error below 1e-12 for |z| <= 50; ~1/(2z) asymptotically.
double dawson(double z);

/// D'(z) via the ODE identity D' = 1 - 2 z D.
double dawson_derivative(double z);

/// Bracketed maximization of D; cached after the first call.
DawsonMax dawson_max();

/// beta / (8 D_max^2): the admissible-exponent threshold.
double beta_star(const SystemParams& params);
double beta_star_of(double beta);

/// int_0^z D(y) dy.  Even, monotone increasing on [0, inf),
/// ~ (1/2) log|z| + C for large |z|.  Accurate to 1e-10 for |z| <= 1e6.
double f_unit(double z);

/// The additive constant in the large-|z| expansion of f_unit:
/// lim (f_unit(z) - log(|z|)/2) = (euler_gamma + 2 log 2) / 4.
double f_unit_asymptotic_constant();

}  // namespace nhb::specfun
