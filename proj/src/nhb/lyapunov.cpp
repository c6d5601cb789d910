#include "nhb/lyapunov.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "nhb/numerics.hpp"
#include "nhb/rng.hpp"
#include "nhb/specfun.hpp"

namespace nhb {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

void LyapunovParams::validate(const SystemParams& params) const {
  const double bs = specfun::beta_star(params);
  if (!(beta0 > 0.0 && beta0 < bs)) {
    std::ostringstream os;
    os << "lyapunov: beta0 = " << beta0
       << " must satisfy 0 < beta0 < beta* = beta/(8 Dmax^2) = " << bs;
    throw ConfigError(os.str());
  }
  if (!(eps0 > 0.0 && eps0 < beta0))
    throw ConfigError("lyapunov: eps0 must lie in (0, beta0)");
  const double delta_cap = std::min(eps0 / 3.0, 0.5 * (bs - beta0));
  if (!(delta > 0.0 && delta <= delta_cap + 1e-15))
    throw ConfigError("lyapunov: delta exceeds min(eps0/3, beta*/2 - beta0/2)");
  if (!(alpha > 0.0)) throw ConfigError("lyapunov: alpha must be positive");
  if (!(alpha1 > 0.0 && alpha2 > 0.0))
    throw ConfigError("lyapunov: alpha1, alpha2 must be positive");
  if (!(p_star > 0.0 && u_star > 0.0))
    throw ConfigError("lyapunov: p_star, u_star must be positive");
  double floor = 0.0;
  for (int i = 0; i < params.mass().size(); ++i)
    floor = std::max(floor, 3.0 * params.gamma() / params.mass()[i]);
  if (!(xi_star > floor + 1.0))
    throw ConfigError("lyapunov: xi_star must exceed max_j(3 gamma/m_j) + 1");
}

double psi0(const State& x, const LyapunovParams& lp,
            const SystemParams& params) {
  const CutoffSet cut = lp.cutoffs();
  return lp.delta * cut.f0(x.xi) * 0.5 * params.aux_a() * x.xi * x.xi;
}

double psi0_dxi(const State& x, const LyapunovParams& lp,
                const SystemParams& params) {
  const CutoffSet cut = lp.cutoffs();
  const double a = params.aux_a();
  return lp.delta *
         (cut.f0_deriv(x.xi) * 0.5 * a * x.xi * x.xi + cut.f0(x.xi) * a * x.xi);
}

namespace {

struct GradContext {
  Eigen::VectorXd grad;
  double grad_sq;
  double p_sq;        // Euclidean |p|^2 (the cutoff convention)
  double xi_sq1;      // xi^2 + 1
  double sqrt_xi_sq1;
};

GradContext make_grad_context(const State& x, const Potential& pot) {
  GradContext ctx;
  ctx.grad = pot.gradient(x.q);
  ctx.grad_sq = ctx.grad.squaredNorm();
  ctx.p_sq = x.p.squaredNorm();
  ctx.xi_sq1 = x.xi * x.xi + 1.0;
  ctx.sqrt_xi_sq1 = std::sqrt(ctx.xi_sq1);
  return ctx;
}

double g1_from_ctx(const State& x, const GradContext& ctx,
                   const LyapunovParams& lp) {
  const CutoffSet cut = lp.cutoffs();
  const double a1 = cut.f1(x.xi);
  if (a1 == 0.0) return 0.0;
  const double a2 = cut.f2(ctx.p_sq / (lp.p_star * ctx.sqrt_xi_sq1));
  if (a2 == 0.0) return 0.0;
  const double a3 = cut.f3(ctx.grad_sq / (lp.u_star * ctx.xi_sq1));
  return a1 * a2 * a3;
}

double g2_from_ctx(const State& x, const GradContext& ctx,
                   const LyapunovParams& lp) {
  const CutoffSet cut = lp.cutoffs();
  const double b1 = cut.h1(x.xi);
  if (b1 == 0.0) return 0.0;
  const double b2 = cut.h2(ctx.p_sq / (lp.p_star * ctx.sqrt_xi_sq1));
  if (b2 == 0.0) return 0.0;
  const double b3 = cut.h3(ctx.grad_sq / (lp.u_star * ctx.xi_sq1));
  return b1 * b2 * b3;
}

double psi1_from_ctx(const State& x, const GradContext& ctx,
                     const LyapunovParams& lp) {
  if (ctx.grad_sq < 0.5 * lp.u_star) return 0.0;
  const double g1 = g1_from_ctx(x, ctx, lp);
  if (g1 == 0.0) return 0.0;
  const double p_dot_grad = x.p.dot(ctx.grad);
  return g1 * lp.alpha1 * ctx.sqrt_xi_sq1 * p_dot_grad / ctx.grad_sq;
}

double psi2_from_ctx(const State& x, const GradContext& ctx,
                     const LyapunovParams& lp, const SystemParams& params) {
  const double g2 = g2_from_ctx(x, ctx, lp);
  if (g2 == 0.0) return 0.0;
  const double noise_sq = 2.0 * params.gamma() / params.beta();
  const int k = params.dim();
  double sum = 0.0;
  for (int i = 0; i < params.particles(); ++i) {
    const double gm = params.gamma() / params.mass()[i];
    if (x.xi > -3.0 * gm) continue;
    const double c = std::abs(x.xi + gm);
    const double scale = std::sqrt(c / noise_sq);
    for (int l = 0; l < k; ++l) {
      const int idx = i * k + l;
      const double z = scale * (x.p[idx] - ctx.grad[idx] / c);
      sum += -2.0 * lp.alpha2 * specfun::f_unit(z);
    }
  }
  return g2 * sum;
}

}  // namespace

double g1_value(const State& x, const Potential& pot,
                const LyapunovParams& lp) {
  return g1_from_ctx(x, make_grad_context(x, pot), lp);
}

double g2_value(const State& x, const Potential& pot,
                const LyapunovParams& lp) {
  return g2_from_ctx(x, make_grad_context(x, pot), lp);
}

double psi1(const State& x, const Potential& pot, const LyapunovParams& lp,
            const SystemParams& params) {
  (void)params;
  return psi1_from_ctx(x, make_grad_context(x, pot), lp);
}

double psi2(const State& x, const Potential& pot, const LyapunovParams& lp,
            const SystemParams& params) {
  return psi2_from_ctx(x, make_grad_context(x, pot), lp, params);
}

double psi12(const State& x, const Potential& pot, const LyapunovParams& lp,
             const SystemParams& params) {
  const GradContext ctx = make_grad_context(x, pot);
  return psi1_from_ctx(x, ctx, lp) + psi2_from_ctx(x, ctx, lp, params);
}

VW V_and_W(const State& x, const Potential& pot, const LyapunovParams& lp,
           const SystemParams& params) {
  const double h = hamiltonian(x, pot, params);
  const double v = lp.beta0 * h + psi0(x, lp, params) + psi12(x, pot, lp, params);
  VW out;
  out.v = v;
  out.overflowed = v > 709.0;
  out.w = out.overflowed ? kInf : std::exp(v);
  return out;
}

FieldDerivs numeric_field_derivs(const ScalarField& phi, const State& x) {
  const int d = static_cast<int>(x.q.size());
  FieldDerivs out;
  out.dq.resize(d);
  out.dp.resize(d);
  State work = x;
  try {
    for (int c = 0; c < d; ++c) {
      const double qc = x.q[c];
      out.dq[c] = richardson_d1(
          [&](double v) {
            work.q[c] = v;
            const double r = phi(work);
            work.q[c] = qc;
            return r;
          },
          qc, fd_step_first(qc));
    }
    out.lap_p = 0.0;
    for (int c = 0; c < d; ++c) {
      const double pc = x.p[c];
      const auto along = [&](double v) {
        work.p[c] = v;
        const double r = phi(work);
        work.p[c] = pc;
        return r;
      };
      out.dp[c] = richardson_d1(along, pc, fd_step_first(pc));
      out.lap_p += richardson_d2(along, pc, fd_step_second(pc));
    }
    out.dxi = richardson_d1(
        [&](double v) {
          work.xi = v;
          const double r = phi(work);
          work.xi = x.xi;
          return r;
        },
        x.xi, fd_step_first(x.xi));
  } catch (const DomainError&) {
    throw NumericError("field derivatives: stencil point left the domain");
  }
  return out;
}

double apply_t1(const FieldDerivs& d, const State& x,
                const SystemParams& params) {
  double s = 0.0;
  for (int c = 0; c < x.p.size(); ++c)
    s += x.p[c] / params.mass_of_coord(c) * d.dq[c];
  return s;
}

double apply_a(const FieldDerivs& d, const State& x, const Potential& pot,
               const SystemParams& params) {
  const Eigen::VectorXd grad = pot.gradient(x.q);
  double s = 0.0;
  for (int c = 0; c < x.p.size(); ++c) {
    const double friction = x.xi + params.gamma() / params.mass_of_coord(c);
    s += (-friction * x.p[c] - grad[c]) * d.dp[c];
  }
  s += params.gamma() / params.beta() * d.lap_p;
  return s;
}

double apply_t2(const FieldDerivs& d, const State& x,
                const SystemParams& params) {
  const double kn = static_cast<double>(params.dim()) * params.particles();
  return (kinetic_norm_sq(x.p, params) - kn / params.beta()) /
         params.aux_a() * d.dxi;
}

double apply_generator(const FieldDerivs& d, const State& x,
                       const Potential& pot, const SystemParams& params) {
  return apply_t1(d, x, params) + apply_a(d, x, pot, params) +
         apply_t2(d, x, params);
}

double generator_apply(const ScalarField& phi, const State& x,
                       const Potential& pot, const SystemParams& params) {
  return apply_generator(numeric_field_derivs(phi, x), x, pot, params);
}

FieldDerivs hamiltonian_derivs(const State& x, const Potential& pot,
                               const SystemParams& params) {
  FieldDerivs d;
  d.dq = pot.gradient(x.q);
  d.dp.resize(x.p.size());
  d.lap_p = 0.0;
  for (int c = 0; c < x.p.size(); ++c) {
    const double m = params.mass_of_coord(c);
    d.dp[c] = x.p[c] / m;
    d.lap_p += 1.0 / m;
  }
  d.dxi = params.aux_a() * x.xi;
  return d;
}

double generator_hamiltonian_closed_form(const State& x,
                                         const SystemParams& params) {
  const double kn = static_cast<double>(params.dim()) * params.particles();
  double friction_term = 0.0;
  for (int c = 0; c < x.p.size(); ++c) {
    const double m = params.mass_of_coord(c);
    friction_term += x.p[c] * x.p[c] / (m * m);
  }
  return -x.xi * kn / params.beta() - params.gamma() * friction_term +
         params.friction_mass_sum() / params.beta();
}

double drift_ratio(const State& x, const Potential& pot,
                   const LyapunovParams& lp, const SystemParams& params) {
  // Analytic part: beta0 H + psi0.
  FieldDerivs total = hamiltonian_derivs(x, pot, params);
  total.dq *= lp.beta0;
  total.dp *= lp.beta0;
  total.dxi = lp.beta0 * total.dxi + psi0_dxi(x, lp, params);
  total.lap_p *= lp.beta0;

  // Numeric part: psi1 + psi2 via Richardson stencils.
  const FieldDerivs pert = numeric_field_derivs(
      [&](const State& s) { return psi12(s, pot, lp, params); }, x);
  total.dq += pert.dq;
  total.dp += pert.dp;
  total.dxi += pert.dxi;
  total.lap_p += pert.lap_p;

  const double lv = apply_generator(total, x, pot, params);
  return lv + params.gamma() / params.beta() * total.dp.squaredNorm();
}

const char* region_name(Region r) {
  switch (r) {
    case Region::R0: return "R0";
    case Region::R1: return "R1";
    case Region::R2: return "R2";
    case Region::Mix: return "mix";
    case Region::Other: return "other";
  }
  return "?";
}

Region classify_region(const State& x, const Potential& pot,
                       const LyapunovParams& lp) {
  const GradContext ctx = make_grad_context(x, pot);
  if (x.xi >= lp.k_star || ctx.p_sq >= lp.p_star * ctx.sqrt_xi_sq1)
    return Region::R0;
  const double g1 = g1_from_ctx(x, ctx, lp);
  if (g1 == 1.0) return Region::R1;
  const double g2 = g2_from_ctx(x, ctx, lp);
  if (g2 == 1.0) return Region::R2;
  if (g1 > 0.0 || g2 > 0.0) return Region::Mix;
  return Region::Other;
}

namespace {

// In-domain reference point with small U, used as the origin of the
// level-set rays.
Eigen::VectorXd find_base_point(const Potential& pot) {
  const int d = pot.dof();
  Eigen::VectorXd q = Eigen::VectorXd::Zero(d);
  if (pot.in_domain(q)) return q;
  // Spread configurations for pair potentials with a singular diagonal.
  for (double spacing = 1.0; spacing <= 8.0; spacing *= 2.0) {
    for (int c = 0; c < d; ++c) q[c] = spacing * (c + 1);
    if (pot.in_domain(q)) return q;
  }
  throw NumericError("level-set sampling: no in-domain base point found");
}

// A point q with U(q) ~ u_target along the ray base + s * dir.
bool sample_on_level(const Potential& pot, const Eigen::VectorXd& base,
                     const Eigen::VectorXd& dir, double u_target,
                     Eigen::VectorXd& out) {
  const double u0 = pot.value(base);
  if (!(u0 <= u_target)) return false;
  double lo = 0.0, hi = 1.0;
  double u_hi = 0.0;
  for (int it = 0; it < 80; ++it) {
    const Eigen::VectorXd q = base + hi * dir;
    u_hi = pot.in_domain(q) ? pot.value(q) : kInf;
    if (u_hi >= u_target) break;
    lo = hi;
    hi *= 2.0;
  }
  if (!(u_hi >= u_target)) return false;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const Eigen::VectorXd q = base + mid * dir;
    const double u = pot.in_domain(q) ? pot.value(q) : kInf;
    if (u < u_target) lo = mid; else hi = mid;
    if (hi - lo < 1e-13 * std::max(1.0, hi)) break;
  }
  out = base + 0.5 * (lo + hi) * dir;
  if (!pot.in_domain(out)) return false;
  const double u = pot.value(out);
  return std::isfinite(u) && std::abs(u - u_target) <= 1e-6 * std::max(1.0, u_target);
}

struct ShellSampler {
  const Potential& pot;
  const LyapunovParams& lp;
  const SystemParams& params;
  double lo, hi;
  Pcg64& rng;
  Eigen::VectorXd base;

  ShellSampler(const Potential& pot_, const LyapunovParams& lp_,
               const SystemParams& params_, double lo_, double hi_,
               Pcg64& rng_)
      : pot(pot_), lp(lp_), params(params_), lo(lo_), hi(hi_), rng(rng_),
        base(find_base_point(pot_)) {}

  double xi_abs_max() const {
    return std::sqrt(2.0 * hi / params.aux_a());
  }

  Eigen::VectorXd random_direction(int d) {
    Eigen::VectorXd v(d);
    for (int c = 0; c < d; ++c) v[c] = rng.normal();
    const double n = v.norm();
    return (n > 0) ? Eigen::VectorXd(v / n) : Eigen::VectorXd::Unit(d, 0);
  }

  // Draw momentum with Euclidean magnitude uniform in [r_lo, r_hi].
  Eigen::VectorXd draw_p(double r_lo, double r_hi) {
    const double r = rng.uniform(r_lo, r_hi);
    return r * random_direction(params.dof());
  }

  // Complete (xi, p) with a position at a uniformly drawn admissible
  // U-level.  Returns false when the energy window is empty or the
  // level-set search fails.
  bool complete_state(double xi, const Eigen::VectorXd& p, State& out) {
    const double kin = kinetic_energy(p, params);
    const double rest = 0.5 * params.aux_a() * xi * xi + kin;
    const double u_hi = hi - rest;
    if (u_hi <= 0.0) return false;
    const double u_lo = std::max(0.0, lo - rest);
    if (u_lo > u_hi) return false;
    const double u_base = pot.value(base);
    const double u_target = std::max(u_base, rng.uniform(u_lo, u_hi));
    if (u_target > u_hi) return false;
    Eigen::VectorXd q;
    if (!sample_on_level(pot, base, random_direction(params.dof()), u_target, q))
      return false;
    out.q = q;
    out.p = p;
    out.xi = xi;
    return true;
  }

  bool in_shell(const State& x) const {
    const double h = hamiltonian(x, pot, params);
    return h >= lo - 1e-6 * std::max(1.0, lo) && h <= hi + 1e-6 * hi;
  }

  // Maximum Euclidean |p| compatible with the shell ceiling.
  double p_eucl_max() const {
    const double m_max = params.mass().maxCoeff();
    return std::sqrt(2.0 * hi * m_max);
  }

  bool propose(Region target, State& out) {
    const double xm = xi_abs_max();
    switch (target) {
      case Region::R0: {
        if (rng.uniform() < 0.5) {
          const double xi = rng.uniform(lp.k_star, std::max(lp.k_star + 1.0, xm));
          const Eigen::VectorXd p = draw_p(0.0, p_eucl_max());
          if (!complete_state(xi, p, out)) return false;
        } else {
          const double xi = rng.uniform(-xm, xm);
          const double p_lo = std::sqrt(lp.p_star * std::sqrt(xi * xi + 1.0));
          if (p_lo >= p_eucl_max()) return false;
          const Eigen::VectorXd p = draw_p(p_lo, p_eucl_max());
          if (!complete_state(xi, p, out)) return false;
        }
        return in_shell(out) && classify_region(out, pot, lp) == Region::R0;
      }
      case Region::R1: {
        const double xi = rng.uniform(-xm, lp.k_star);
        const double cap = std::sqrt(lp.p_star * std::sqrt(xi * xi + 1.0));
        const Eigen::VectorXd p = draw_p(0.0, cap);
        if (!complete_state(xi, p, out)) return false;
        return in_shell(out) && classify_region(out, pot, lp) == Region::R1;
      }
      case Region::R2: {
        const double xi_hi = -lp.xi_star - 1.0;
        if (-xm >= xi_hi) return false;
        const double xi = rng.uniform(-xm, xi_hi);
        const double cap = std::sqrt(lp.p_star * std::sqrt(xi * xi + 1.0));
        const Eigen::VectorXd p = draw_p(0.0, cap);
        if (!complete_state(xi, p, out)) return false;
        return in_shell(out) && classify_region(out, pot, lp) == Region::R2;
      }
      case Region::Mix: {
        double xi;
        const double band = rng.uniform();
        if (band < 0.3) {
          xi = rng.uniform(lp.k_star - 0.5, lp.k_star + 1.5);
        } else if (band < 0.6) {
          xi = rng.uniform(-lp.xi_star - 1.5, -lp.xi_star + 0.5);
        } else {
          xi = rng.uniform(-std::min(xm, lp.xi_star + 4.0), lp.k_star);
        }
        const double s = std::sqrt(xi * xi + 1.0);
        const double p_cap = std::sqrt(2.2 * lp.p_star * s);
        const Eigen::VectorXd p = draw_p(0.0, std::min(p_cap, p_eucl_max()));
        if (!complete_state(xi, p, out)) return false;
        return in_shell(out) && classify_region(out, pot, lp) == Region::Mix;
      }
      case Region::Other: {
        const double xi = rng.uniform(-xm, xm);
        const Eigen::VectorXd p = draw_p(0.0, p_eucl_max());
        if (!complete_state(xi, p, out)) return false;
        return in_shell(out);
      }
    }
    return false;
  }
};

}  // namespace

CertReport drift_certify(const Potential& pot, const LyapunovParams& lp,
                         const SystemParams& params, double shell_lo,
                         double shell_hi, long n_samples, std::uint64_t seed) {
  if (!(shell_lo > 0.0 && shell_hi > shell_lo))
    throw ContractViolation("drift_certify: invalid shell");
  lp.validate(params);
  CertReport report;
  report.alpha = lp.alpha;
  report.shell_lo = shell_lo;
  report.shell_hi = shell_hi;

  Pcg64 rng(seed);
  ShellSampler sampler(pot, lp, params, shell_lo, shell_hi, rng);

  const Region plan[4] = {Region::R0, Region::R1, Region::R2, Region::Mix};
  const long quota = n_samples / 4;
  const int max_attempts = 200;

  auto evaluate = [&](const State& x) {
    const double drift = drift_ratio(x, pot, lp, params);
    const Region region = classify_region(x, pot, lp);
    auto& tally = report.regions[static_cast<int>(region)];
    tally.count += 1;
    tally.max_drift_ratio = std::max(tally.max_drift_ratio, drift);
    report.max_drift_ratio = std::max(report.max_drift_ratio, drift);
    report.samples += 1;
    if (drift > -lp.alpha) {
      tally.violations += 1;
      report.violations += 1;
      if (report.worst.size() < 10)
        report.worst.push_back({x, drift, region});
      else {
        auto it = std::min_element(report.worst.begin(), report.worst.end(),
                                   [](const Violation& a, const Violation& b) {
                                     return a.drift < b.drift;
                                   });
        if (drift > it->drift) *it = {x, drift, region};
      }
    }
    // Sandwich (I): (beta0 - eps0) H <= log W <= (beta0 + eps0) H.
    const double h = hamiltonian(x, pot, params);
    const double v = lp.beta0 * h + psi0(x, lp, params) + psi12(x, pot, lp, params);
    const double slack = 1e-12 * std::max(1.0, h);
    if (v < (lp.beta0 - lp.eps0) * h - slack ||
        v > (lp.beta0 + lp.eps0) * h + slack)
      report.sandwich_violations += 1;
  };

  for (Region target : plan) {
    long accepted = 0;
    long attempts = 0;
    while (accepted < quota && attempts < quota * max_attempts) {
      ++attempts;
      State x;
      if (!sampler.propose(target, x)) continue;
      evaluate(x);
      ++accepted;
    }
  }
  // Top up to the requested total with unconstrained shell samples.
  long attempts = 0;
  while (report.samples < n_samples && attempts < n_samples * 50L) {
    ++attempts;
    State x;
    if (!sampler.propose(Region::Other, x)) continue;
    evaluate(x);
  }

  // Compact-part sweep for the constant K: log K = max of V + log(drift+alpha)
  // over {H <= shell_lo}.  The positive-drift core sits at small H, so the
  // sweep walks dyadic energy sub-shells down to order one instead of
  // sampling the whole compact set uniformly.
  {
    double log_k = -kInf;
    long got_total = 0;
    const long n_compact =
        std::min<long>(20000, std::max<long>(2000, n_samples / 5));
    std::vector<std::pair<double, double>> bands;
    double hi_band = shell_lo;
    while (hi_band > 0.5) {
      bands.emplace_back(0.5 * hi_band, hi_band);
      hi_band *= 0.5;
    }
    bands.emplace_back(1e-4, std::max(1e-3, hi_band));
    const long per_band = std::max<long>(200, n_compact / static_cast<long>(bands.size()));
    for (std::size_t b = 0; b < bands.size(); ++b) {
      Pcg64 rng2(splitmix64(seed ^ (0x5c0a9ac7e5ull + b)));
      ShellSampler compact(pot, lp, params, bands[b].first, bands[b].second,
                           rng2);
      long got = 0;
      long tries = 0;
      while (got < per_band && tries < per_band * 60L) {
        ++tries;
        State x;
        if (!compact.propose(Region::Other, x)) continue;
        ++got;
        const double drift = drift_ratio(x, pot, lp, params);
        const double excess = drift + lp.alpha;
        if (excess <= 0.0) continue;
        const double v = lp.beta0 * hamiltonian(x, pot, params) +
                         psi0(x, lp, params) + psi12(x, pot, lp, params);
        log_k = std::max(log_k, v + std::log(excess));
      }
      got_total += got;
    }
    report.log_k = log_k;
    report.compact_samples = got_total;
  }

  report.pass = report.violations == 0 && report.sandwich_violations == 0 &&
                report.samples >= (3 * n_samples) / 4;
  return report;
}

double strip_energy_bound(const Potential& pot, const LyapunovParams& lp,
                          const SystemParams& params) {
  const double xi_b = std::max(lp.k_star + 1.0, lp.xi_star + 4.0);
  const double p_sq_eucl = 2.0 * lp.p_star * std::sqrt(xi_b * xi_b + 1.0);
  const double kin_bound = 0.5 * p_sq_eucl / params.mass().minCoeff();
  const double grad_sq_cap = 4.0 * lp.u_star * (xi_b * xi_b + 1.0);

  const Eigen::VectorXd base = [&] {
    Eigen::VectorXd q = Eigen::VectorXd::Zero(pot.dof());
    if (pot.in_domain(q)) return q;
    for (int c = 0; c < q.size(); ++c) q[c] = 1.5 * (c + 1);
    return q;
  }();

  // Largest U reachable while |grad U|^2 stays under the cap, probed along
  // a spread of rays.
  double u_bound = pot.value(base);
  Pcg64 rng(7);
  const int d = pot.dof();
  std::vector<Eigen::VectorXd> dirs;
  for (int c = 0; c < d; ++c) {
    dirs.push_back(Eigen::VectorXd::Unit(d, c));
    dirs.push_back(-Eigen::VectorXd::Unit(d, c));
  }
  for (int r = 0; r < 8; ++r) {
    Eigen::VectorXd v(d);
    for (int c = 0; c < d; ++c) v[c] = rng.normal();
    if (v.norm() > 0) dirs.push_back(v.normalized());
  }
  for (const auto& dir : dirs) {
    double s_in = 0.0, s_out = -1.0;
    for (double s = 0.25; s <= 1e7; s *= 2.0) {
      const Eigen::VectorXd q = base + s * dir;
      if (!pot.in_domain(q)) break;
      if (pot.gradient(q).squaredNorm() <= grad_sq_cap) {
        s_in = s;
      } else {
        s_out = s;
        break;
      }
    }
    if (s_out < 0.0) continue;
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (s_in + s_out);
      const Eigen::VectorXd q = base + mid * dir;
      if (pot.in_domain(q) && pot.gradient(q).squaredNorm() <= grad_sq_cap)
        s_in = mid;
      else
        s_out = mid;
    }
    const Eigen::VectorXd q = base + s_in * dir;
    if (pot.in_domain(q)) u_bound = std::max(u_bound, pot.value(q));
  }

  return 0.5 * params.aux_a() * xi_b * xi_b + kin_bound + u_bound;
}

SelectResult select_params(double alpha, double beta0, double eps0,
                           const Potential& pot, const SystemParams& params,
                           const SelectOptions& opts) {
  const double beta = params.beta();
  const double bs = specfun::beta_star(params);
  if (!(alpha > 0.0)) throw ConfigError("select_params: alpha must be positive");
  if (!(beta0 > 0.0 && beta0 < bs)) {
    std::ostringstream os;
    os << "select_params: beta0 = " << beta0
       << " rejected; the admissible range is 0 < beta0 < beta* = "
       << "beta/(8 Dmax^2) = " << bs;
    throw ConfigError(os.str());
  }
  if (!(eps0 > 0.0 && eps0 < beta0))
    throw ConfigError("select_params: eps0 must lie in (0, beta0)");

  const double kn = static_cast<double>(params.dim()) * params.particles();
  const double k1 = params.friction_mass_sum();

  LyapunovParams lp;
  lp.beta0 = beta0;
  lp.eps0 = eps0;
  lp.alpha = alpha;
  lp.k1 = k1;
  lp.delta = std::min(eps0 / 3.0, 0.5 * (bs - beta0));
  const double eps = std::min(
      std::min(eps0 / 6.0, 0.25),
      0.5 * std::min(0.5 - beta0 / (2.0 * beta), bs - beta0 - lp.delta));
  lp.alpha1 = 2.0 * alpha + 2.0 * (beta0 / beta) * k1 +
              2.0 * (beta0 + lp.delta + eps) / beta * kn;
  const double dmax = specfun::dawson_max().d_max;
  lp.alpha2 = 1.0 / (4.0 * dmax * dmax);
  lp.k_star = beta * alpha / (beta0 * kn) + k1 / kn +
              (beta0 + lp.delta + eps) / beta0;

  double xi_floor = 0.0;
  for (int i = 0; i < params.mass().size(); ++i)
    xi_floor = std::max(xi_floor, 3.0 * params.gamma() / params.mass()[i]);
  lp.xi_star = xi_floor + 1.0 + opts.xi_star_margin;
  lp.p_star = opts.p_star_seed;
  lp.u_star = opts.u_star_seed;

  SelectResult result;
  result.lp = lp;
  for (int round = 0; round < opts.max_rounds; ++round) {
    result.rounds = round + 1;
    lp.validate(params);
    const double shell_lo = 1.1 * strip_energy_bound(pot, lp, params);
    const double shell_hi = 10.0 * shell_lo;
    CertReport probe =
        drift_certify(pot, lp, params, shell_lo, shell_hi,
                      opts.escalation_samples, opts.seed + round);
    if (probe.pass) {
      CertReport confirm =
          drift_certify(pot, lp, params, shell_lo, shell_hi,
                        opts.final_samples, opts.seed + 1000 + round);
      if (confirm.pass) {
        result.lp = lp;
        result.report = std::move(confirm);
        return result;
      }
      probe = std::move(confirm);
    }
    // Escalate whichever scale the violations implicate.
    long vote_xi = 0, vote_u = 0, vote_p = 0;
    for (const auto& v : probe.worst) {
      if (v.x.xi <= -0.5 * lp.xi_star) {
        ++vote_xi;
        continue;
      }
      const double xi_sq1 = v.x.xi * v.x.xi + 1.0;
      const double f3_arg =
          pot.gradient(v.x.q).squaredNorm() / (lp.u_star * xi_sq1);
      if (f3_arg < 2.2) {
        ++vote_u;
        continue;
      }
      const double f2_arg = v.x.p.squaredNorm() / (lp.p_star * std::sqrt(xi_sq1));
      if (f2_arg > 0.8) ++vote_p; else ++vote_u;
    }
    if (round >= 12 || (vote_xi == 0 && vote_u == 0 && vote_p == 0)) {
      lp.p_star *= 2.0;
      lp.u_star *= 2.0;
      lp.xi_star *= 2.0;
    } else if (vote_xi >= vote_u && vote_xi >= vote_p) {
      lp.xi_star *= 2.0;
    } else if (vote_u >= vote_p) {
      lp.u_star *= 2.0;
    } else {
      lp.p_star *= 2.0;
    }
    result.lp = lp;
    result.report = std::move(probe);
  }
  result.lp = lp;
  return result;  // report carries pass = false and the worst offenders
}

std::string CertReport::to_json(const LyapunovParams& lp) const {
  nlohmann::json j;
  j["pass"] = pass;
  j["alpha"] = alpha;
  j["shell"] = {shell_lo, shell_hi};
  j["samples"] = samples;
  j["violations"] = violations;
  j["sandwich_violations"] = sandwich_violations;
  j["max_drift_ratio"] = max_drift_ratio;
  j["log_K"] = std::isfinite(log_k) ? log_k : 0.0;
  j["compact_samples"] = compact_samples;
  nlohmann::json regions_json = nlohmann::json::object();
  for (int r = 0; r < 5; ++r) {
    const auto& tally = regions[r];
    regions_json[region_name(static_cast<Region>(r))] = {
        {"count", tally.count},
        {"max_drift_ratio",
         tally.count > 0 ? tally.max_drift_ratio : 0.0},
        {"violations", tally.violations}};
  }
  j["regions"] = regions_json;
  j["params"] = {{"beta0", lp.beta0},   {"eps0", lp.eps0},
                 {"delta", lp.delta},   {"alpha1", lp.alpha1},
                 {"alpha2", lp.alpha2}, {"K_star", lp.k_star},
                 {"p_star", lp.p_star}, {"U_star", lp.u_star},
                 {"xi_star", lp.xi_star}, {"K1", lp.k1}};
  nlohmann::json worst_json = nlohmann::json::array();
  for (const auto& v : worst) {
    worst_json.push_back(
        {{"drift_ratio", v.drift},
         {"region", region_name(v.region)},
         {"xi", v.x.xi},
         {"q", std::vector<double>(v.x.q.data(), v.x.q.data() + v.x.q.size())},
         {"p", std::vector<double>(v.x.p.data(), v.x.p.data() + v.x.p.size())}});
  }
  j["worst"] = worst_json;
  return j.dump(2);
}

}  // namespace nhb
