#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "nhb/cutoffs.hpp"
#include "nhb/model.hpp"

namespace nhb {

/// Parameters of the Lyapunov function W = exp(beta0 H + psi0 + psi1 + psi2).
struct LyapunovParams {
  double beta0;    // exponent, 0 < beta0 < beta_star
  double eps0;     // total perturbation budget, in (0, beta0)
  double delta;    // psi0 weight
  double alpha;    // target drift rate
  double alpha1;   // psi1 rate
  double alpha2;   // psi2 rate, 1/(4 D_max^2)
  double k_star;   // xi cutoff level
  double p_star;   // momentum cutoff scale
  double u_star;   // gradient cutoff scale
  double xi_star;  // psi2 cutoff level, > max_j(3 gamma/m_j) + 1
  double k1;       // gamma * k * sum_i 1/m_i

  CutoffSet cutoffs() const { return CutoffSet(k_star, xi_star); }

  /// Throws ConfigError when a structural constraint is violated.
  void validate(const SystemParams& params) const;
};

double psi0(const State& x, const LyapunovParams& lp,
            const SystemParams& params);
double psi0_dxi(const State& x, const LyapunovParams& lp,
                const SystemParams& params);

double psi1(const State& x, const Potential& pot, const LyapunovParams& lp,
            const SystemParams& params);

double psi2(const State& x, const Potential& pot, const LyapunovParams& lp,
            const SystemParams& params);

/// psi1 + psi2 in one evaluation (shares the gradient computation).
double psi12(const State& x, const Potential& pot, const LyapunovParams& lp,
             const SystemParams& params);

/// The cutoff products g1, g2 at a state.
double g1_value(const State& x, const Potential& pot, const LyapunovParams& lp);
double g2_value(const State& x, const Potential& pot, const LyapunovParams& lp);

struct VW {
  double v;         // log W = beta0 H + psi
  double w;         // exp(v); +inf when overflowed
  bool overflowed;  // true when w is not representable
};

/// V = beta0 H + psi0 + psi1 + psi2 and W = exp(V).
VW V_and_W(const State& x, const Potential& pot, const LyapunovParams& lp,
           const SystemParams& params);

/// First derivatives in (q, p, xi) and the momentum Laplacian of a scalar
/// field, the inputs the generator needs.
struct FieldDerivs {
  Eigen::VectorXd dq;
  Eigen::VectorXd dp;
  double dxi = 0.0;
  double lap_p = 0.0;
};

using ScalarField = std::function<double(const State&)>;

/// Richardson central differences of a black-box field.
FieldDerivs numeric_field_derivs(const ScalarField& phi, const State& x);

/// The three pieces of the generator: transport in q, the momentum
/// operator (friction + force + diffusion), and the thermostat transport.
double apply_t1(const FieldDerivs& d, const State& x,
                const SystemParams& params);
double apply_a(const FieldDerivs& d, const State& x, const Potential& pot,
               const SystemParams& params);
double apply_t2(const FieldDerivs& d, const State& x,
                const SystemParams& params);

/// Full generator from precomputed derivatives: t1 + a + t2.
double apply_generator(const FieldDerivs& d, const State& x,
                       const Potential& pot, const SystemParams& params);

/// Generator applied to a black-box scalar field via Richardson stencils.
/// Throws NumericError when the stencil would leave the domain.
double generator_apply(const ScalarField& phi, const State& x,
                       const Potential& pot, const SystemParams& params);

/// Analytic derivatives of the Hamiltonian.
FieldDerivs hamiltonian_derivs(const State& x, const Potential& pot,
                               const SystemParams& params);

/// Closed form of (generator H): -xi kN/beta - gamma sum |p_i|^2/m_i^2
/// + (gamma k / beta) sum 1/m_i.
double generator_hamiltonian_closed_form(const State& x,
                                         const SystemParams& params);

/// L V + (gamma/beta) |grad_p V|^2, which equals (L W)/W.
/// Analytic derivatives for beta0 H + psi0, Richardson stencils for
/// psi1 + psi2.
double drift_ratio(const State& x, const Potential& pot,
                   const LyapunovParams& lp, const SystemParams& params);

/// Sampling regions used for certification reporting.
enum class Region { R0, R1, R2, Mix, Other };
const char* region_name(Region r);
Region classify_region(const State& x, const Potential& pot,
                       const LyapunovParams& lp);

struct RegionTally {
  long count = 0;
  double max_drift_ratio = -std::numeric_limits<double>::infinity();
  long violations = 0;
};

struct Violation {
  State x;
  double drift;
  Region region;
};

struct CertReport {
  bool pass = false;
  double alpha = 0.0;
  double shell_lo = 0.0;
  double shell_hi = 0.0;
  long samples = 0;
  long violations = 0;
  long sandwich_violations = 0;
  std::array<RegionTally, 5> regions;  // indexed by Region
  double max_drift_ratio = -std::numeric_limits<double>::infinity();
  double log_k = 0.0;   // log of the compact-set constant K
  long compact_samples = 0;
  std::vector<Violation> worst;  // up to 10 worst offenders
  std::string to_json(const LyapunovParams& lp) const;
};

/// Samples the energy shell [shell_lo, shell_hi], stratified over the
/// cutoff regions, and checks drift_ratio <= -alpha plus the sandwich
/// (beta0 - eps0) H <= log W <= (beta0 + eps0) H.  Also samples the
/// compact part {H <= shell_lo} to estimate the constant K.
CertReport drift_certify(const Potential& pot, const LyapunovParams& lp,
                         const SystemParams& params, double shell_lo,
                         double shell_hi, long n_samples,
                         std::uint64_t seed = 2024);

struct SelectOptions {
  double p_star_seed = 8.0;
  double u_star_seed = 8.0;
  double xi_star_margin = 1.0;
  int max_rounds = 20;
  long escalation_samples = 20000;
  long final_samples = 120000;
  std::uint64_t seed = 2024;
};

struct SelectResult {
  LyapunovParams lp;
  CertReport report;
  int rounds = 0;
};

/// Closed-form parameter selection followed by geometric escalation of
/// p_star, u_star, xi_star (and the shell base) until certification
/// passes or the round budget is exhausted.
SelectResult select_params(double alpha, double beta0, double eps0,
                           const Potential& pot, const SystemParams& params,
                           const SelectOptions& opts = {});

/// Largest Hamiltonian value attainable in the bounded strip where none
/// of the drift mechanisms is saturated; the compact set estimate.
double strip_energy_bound(const Potential& pot, const LyapunovParams& lp,
                          const SystemParams& params);

}  // namespace nhb
