#pragma once

#include <Eigen/Dense>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nhb/errors.hpp"

namespace nhb {

/// Physical parameters of the particle system.
/// Immutable after construction; `beta` is derived as 1/(kB*T).
class SystemParams {
 public:
  SystemParams(int n_particles, int k_dim, Eigen::VectorXd mass, double gamma,
               double k_boltzmann, double temperature, double aux_a);

  int particles() const { return n_particles_; }
  int dim() const { return k_dim_; }
  int dof() const { return n_particles_ * k_dim_; }
  const Eigen::VectorXd& mass() const { return mass_; }
  double mass_of_coord(int c) const { return mass_[c / k_dim_]; }
  double gamma() const { return gamma_; }
  double kB() const { return kB_; }
  double temperature() const { return T_; }
  double kBT() const { return kB_ * T_; }
  double aux_a() const { return a_; }
  double beta() const { return beta_; }

  /// gamma * k * sum_i 1/m_i: the constant term of the generator applied
  /// to the Hamiltonian (the momentum Laplacian contributes k per particle).
  double friction_mass_sum() const;

 private:
  int n_particles_, k_dim_;
  Eigen::VectorXd mass_;
  double gamma_, kB_, T_, a_, beta_;
};

/// A point (q, p, xi) of the extended phase space.
struct State {
  Eigen::VectorXd q;
  Eigen::VectorXd p;
  double xi = 0.0;

  bool finite() const;
};

/// Kinetic-energy norm: ||p||_m^2 = sum_c p_c^2 / m_c.
double kinetic_norm_sq(const Eigen::VectorXd& p, const SystemParams& params);

/// Configuration-space norm used for arc lengths: sqrt(sum_c m_c v_c^2).
/// This is the norm in which the momentum path p = m qdot has
/// ||p||_m = ||qdot||_config.
double config_norm(const Eigen::VectorXd& v, const SystemParams& params);

/// (1/2) ||p||_m^2.
double kinetic_energy(const Eigen::VectorXd& p, const SystemParams& params);

/// Potentials: U >= 0 on an open connected domain O, +infinity outside.
/// Derivatives are analytic.  `zeta` is the Hessian-growth exponent in (1,2).
class Potential {
 public:
  explicit Potential(int dof, double zeta);
  virtual ~Potential() = default;

  virtual double value(const Eigen::VectorXd& q) const = 0;
  virtual Eigen::VectorXd gradient(const Eigen::VectorXd& q) const = 0;
  virtual Eigen::MatrixXd hessian(const Eigen::VectorXd& q) const = 0;
  virtual bool in_domain(const Eigen::VectorXd& q) const = 0;
  /// True when O is all of R^(Nk) (or convex), so the domain distance
  /// between configurations is just the weighted Euclidean one.
  virtual bool convex_domain() const = 0;
  virtual std::string describe() const = 0;

  int dof() const { return dof_; }
  double zeta() const { return zeta_; }

 protected:
  void check_dof(const Eigen::VectorXd& q) const;

 private:
  int dof_;
  double zeta_;
};

using PotentialHandle = std::shared_ptr<const Potential>;

/// U(q) = c |q|^2.
PotentialHandle make_harmonic(int dof, double c, double zeta = 1.5);

/// U(q) = sum_j (c1 q_j^4 - c2 q_j^2) + c3, with c3 large enough that U >= 0.
PotentialHandle make_double_well(int dof, double c1, double c2, double c3,
                                 double zeta = 1.5);

/// U(q) = sum_j P(q_j) for a univariate even-degree polynomial P with
/// positive leading coefficient and min P >= 0.  Coefficients are in
/// increasing-degree order.
PotentialHandle make_polynomial(int dof, std::vector<double> coeffs,
                                double zeta = 1.5);

/// Lennard-Jones pair interaction plus harmonic confinement:
///   U = strength * sum_{i<j} ((r0/r_ij)^12 - 2 (r0/r_ij)^6 + 1)
///       + confine * |q|^2,
/// with O the set of configurations with all pairwise distances > 0.
PotentialHandle make_lennard_jones(int n_particles, int k_dim, double strength,
                                   double r0, double confine,
                                   double zeta = 1.9);

/// H(q, p, xi) = ||p||_m^2 / 2 + U(q) + a xi^2 / 2.
/// Throws DomainError when q is outside O.
double hamiltonian(const State& x, const Potential& pot,
                   const SystemParams& params);

/// One probe point of a normality spot-check.
struct NormalityProbe {
  double u;            // U at the probe
  double grad_norm;    // |grad U|
  double ratio;        // |hess U| / |grad U|^zeta (spectral norm)
};

struct NormalityReport {
  std::vector<NormalityProbe> probes;
  bool grad_increasing = false;
  bool ratio_decreasing = false;
  bool pass = false;
};

/// Samples |grad U| and |hess U|/|grad U|^zeta along a probe sequence with
/// U -> infinity and flags whether the growth conditions look satisfied.
/// Report-only: never throws on FAIL.
NormalityReport normality_spotcheck(const Potential& pot,
                                    const std::vector<Eigen::VectorXd>& probe);

/// Auto-generated probe sequence: along rays from a base point for
/// confining potentials, toward the singular set for pair potentials.
std::vector<Eigen::VectorXd> default_normality_probe(const Potential& pot,
                                                     int n_points = 24);

/// Integrability sanity check of exp(-beta U): quadrature over an expanding
/// box for dof <= 2, trusted above.  Returns the log of the integral when
/// computed.  Throws ConfigError if the integral fails to converge.
std::optional<double> check_integrability(const Potential& pot, double beta);

}  // namespace nhb
