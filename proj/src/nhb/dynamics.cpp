#include "nhb/dynamics.hpp"

#include <atomic>
#include <cmath>
#include <sstream>
#include <thread>

#include "nhb/rng.hpp"

namespace nhb {

void IntegratorConfig::validate() const {
  if (!(dt > 0.0)) throw ConfigError("integrator: dt must be positive");
  if (n_steps < 0) throw ConfigError("integrator: steps must be >= 0");
  if (thinning < 1) throw ConfigError("integrator: thinning must be >= 1");
  if (max_halvings < 0 || max_halvings > 60)
    throw ConfigError("integrator: max_halvings out of range");
}

namespace {

// (1 - exp(-c tau)) / c, stable through c = 0.
inline double phi_decay(double c, double tau) {
  const double z = c * tau;
  if (std::abs(z) < 1e-8) return tau * (1.0 - 0.5 * z + z * z / 6.0);
  return -std::expm1(-z) / c;
}

// Variance of the OU fluctuation integral over [0, tau] with rate c:
// (2 gamma/beta) * int_0^tau exp(-2 c s) ds = (gamma/beta)(1 - e^{-2 c tau})/c.
inline double ou_variance(double c, double tau, double gamma_over_beta) {
  return 2.0 * gamma_over_beta * phi_decay(2.0 * c, tau);
}

}  // namespace

State step_euler_maruyama(const State& x, double dt,
                          std::span<const double> noise, const Potential& pot,
                          const SystemParams& params) {
  if (!(dt > 0.0)) throw ContractViolation("step: dt must be positive");
  if (static_cast<int>(noise.size()) != params.dof())
    throw ContractViolation("step: noise dimension mismatch");
  const double kn = static_cast<double>(params.dim()) * params.particles();
  const Eigen::VectorXd grad = pot.gradient(x.q);
  const double amp = std::sqrt(2.0 * params.gamma() * params.kBT() * dt);

  State next;
  next.q = x.q;
  next.p = x.p;
  // xi uses the pre-step momentum: the discrete identity is then exact.
  next.xi = x.xi + dt * (kinetic_norm_sq(x.p, params) - kn / params.beta()) /
                       params.aux_a();
  for (int c = 0; c < params.dof(); ++c) {
    const double m = params.mass_of_coord(c);
    next.q[c] = x.q[c] + dt * x.p[c] / m;
    next.p[c] = x.p[c] -
                dt * (x.xi * x.p[c] + params.gamma() / m * x.p[c] + grad[c]) +
                amp * noise[c];
  }
  if (!pot.in_domain(next.q))
    throw DomainError("step: position update left the domain");
  return next;
}

State step_splitting(const State& x, double dt, std::span<const double> noise,
                     const Potential& pot, const SystemParams& params) {
  if (!(dt > 0.0)) throw ContractViolation("step: dt must be positive");
  if (static_cast<int>(noise.size()) != params.dof())
    throw ContractViolation("step: noise dimension mismatch");
  const double kn = static_cast<double>(params.dim()) * params.particles();
  const double a = params.aux_a();
  const double gob = params.gamma() / params.beta();
  const double half = 0.5 * dt;

  State s = x;
  // xi/2 with the incoming momentum.
  s.xi += half * (kinetic_norm_sq(s.p, params) - kn / params.beta()) / a;
  const double xi_frozen = s.xi;

  // B/2: exact linear momentum drift with frozen (xi, grad U).
  {
    const Eigen::VectorXd grad = pot.gradient(s.q);
    for (int c = 0; c < params.dof(); ++c) {
      const double cc = xi_frozen + params.gamma() / params.mass_of_coord(c);
      s.p[c] = std::exp(-cc * half) * s.p[c] - grad[c] * phi_decay(cc, half);
    }
  }
  // O: fluctuation kick, exact OU variance with frozen coefficient.
  for (int c = 0; c < params.dof(); ++c) {
    const double cc = xi_frozen + params.gamma() / params.mass_of_coord(c);
    s.p[c] += std::sqrt(ou_variance(cc, dt, gob)) * noise[c];
  }
  // A: exact position drift.
  for (int c = 0; c < params.dof(); ++c)
    s.q[c] += dt * s.p[c] / params.mass_of_coord(c);
  if (!pot.in_domain(s.q))
    throw DomainError("step: position update left the domain");
  // B/2 with the gradient at the new position.
  {
    const Eigen::VectorXd grad = pot.gradient(s.q);
    for (int c = 0; c < params.dof(); ++c) {
      const double cc = xi_frozen + params.gamma() / params.mass_of_coord(c);
      s.p[c] = std::exp(-cc * half) * s.p[c] - grad[c] * phi_decay(cc, half);
    }
  }
  // xi/2 with the outgoing momentum: trapezoid quadrature overall.
  s.xi += half * (kinetic_norm_sq(s.p, params) - kn / params.beta()) / a;
  return s;
}

namespace {

struct StepAccounting {
  double sum_w = 0.0;
  double sum_wkin = 0.0;
  double sum_warc = 0.0;
  std::uint64_t draws = 0;
};

class StepDriver {
 public:
  StepDriver(const IntegratorConfig& config, const Potential& pot,
             const SystemParams& params, std::uint64_t chain)
      : config_(config), pot_(pot), params_(params),
        stream_(config.seed, chain) {}

  // Advance the state by one outer step of size config.dt, applying the
  // boundary policy.  Accumulates the quadrature sums of the successful
  // (sub)steps into `acc`.
  void advance(State& x, std::uint64_t step_index, StepAccounting& acc) {
    attempt_ = 0;
    if (config_.boundary_policy == BoundaryPolicy::RejectStep) {
      for (int tries = 0; tries < config_.max_rejects; ++tries) {
        try {
          apply_step(x, config_.dt, step_index, acc);
          return;
        } catch (const DomainError&) {
          continue;  // fresh noise on the next attempt
        }
      }
      throw NumericError(step_error_message(x, step_index));
    }
    advance_halving(x, config_.dt, 0, step_index, acc);
  }

 private:
  void advance_halving(State& x, double h, int depth, std::uint64_t step_index,
                       StepAccounting& acc) {
    try {
      apply_step(x, h, step_index, acc);
      return;
    } catch (const DomainError&) {
      if (depth >= config_.max_halvings)
        throw NumericError(step_error_message(x, step_index));
    }
    advance_halving(x, 0.5 * h, depth + 1, step_index, acc);
    advance_halving(x, 0.5 * h, depth + 1, step_index, acc);
  }

  void apply_step(State& x, double h, std::uint64_t step_index,
                  StepAccounting& acc) {
    noise_.resize(params_.dof());
    stream_.fill(step_index, attempt_++, noise_);
    acc.draws += noise_.size();
    const double kin_pre = kinetic_norm_sq(x.p, params_);
    State next;
    if (config_.scheme == Scheme::EulerMaruyama) {
      next = step_euler_maruyama(x, h, noise_, pot_, params_);
      acc.sum_w += h;
      acc.sum_wkin += h * kin_pre;
      acc.sum_warc += h * std::sqrt(kin_pre);
    } else {
      next = step_splitting(x, h, noise_, pot_, params_);
      const double kin_post = kinetic_norm_sq(next.p, params_);
      acc.sum_w += h;
      acc.sum_wkin += 0.5 * h * (kin_pre + kin_post);
      acc.sum_warc += 0.5 * h * (std::sqrt(kin_pre) + std::sqrt(kin_post));
    }
    if (!next.finite())
      throw NumericError(step_error_message(x, step_index));
    x = std::move(next);
  }

  std::string step_error_message(const State& x, std::uint64_t step_index) {
    std::ostringstream os;
    os << "integrator: step " << step_index
       << " failed under the boundary policy; state: xi = " << x.xi << ", q = [";
    for (int c = 0; c < x.q.size(); ++c)
      os << (c ? ", " : "") << x.q[c];
    os << "]";
    return os.str();
  }

  const IntegratorConfig& config_;
  const Potential& pot_;
  const SystemParams& params_;
  GaussianStream stream_;
  std::vector<double> noise_;
  std::uint32_t attempt_ = 0;
};

}  // namespace

Trajectory simulate(const State& x0, const IntegratorConfig& config,
                    const Potential& pot, const SystemParams& params,
                    std::uint64_t chain_id) {
  config.validate();
  if (static_cast<int>(x0.q.size()) != params.dof() ||
      static_cast<int>(x0.p.size()) != params.dof())
    throw ContractViolation("simulate: state dimension mismatch");
  if (!x0.finite()) throw ContractViolation("simulate: non-finite initial state");
  if (!pot.in_domain(x0.q))
    throw DomainError("simulate: initial position outside the domain");

  Trajectory traj;
  traj.dt = config.dt;
  traj.scheme = config.scheme;
  StepAccounting acc;
  auto record = [&](double t, const State& x) {
    traj.times.push_back(t);
    traj.states.push_back(x);
    traj.sum_w.push_back(acc.sum_w);
    traj.sum_wkin.push_back(acc.sum_wkin);
    traj.sum_warc.push_back(acc.sum_warc);
    traj.brownian_increments_consumed.push_back(acc.draws);
  };

  State x = x0;
  record(0.0, x);
  StepDriver driver(config, pot, params, chain_id);
  for (long i = 0; i < config.n_steps; ++i) {
    driver.advance(x, static_cast<std::uint64_t>(i), acc);
    traj.total_steps = i + 1;
    if ((i + 1) % config.thinning == 0 || i + 1 == config.n_steps)
      record((i + 1) * config.dt, x);
  }
  return traj;
}

std::vector<ChainResult> ensemble_run(const std::vector<State>& x0s,
                                      const IntegratorConfig& config,
                                      const Potential& pot,
                                      const SystemParams& params,
                                      int n_threads) {
  config.validate();
  const int n = static_cast<int>(x0s.size());
  std::vector<ChainResult> results(n);
  if (n == 0) return results;
  if (n_threads <= 0)
    n_threads = static_cast<int>(std::thread::hardware_concurrency());
  n_threads = std::max(1, std::min(n_threads, n));

  std::atomic<int> next{0};
  auto worker = [&] {
    for (;;) {
      const int c = next.fetch_add(1);
      if (c >= n) return;
      try {
        results[c].trajectory =
            simulate(x0s[c], config, pot, params, static_cast<std::uint64_t>(c));
      } catch (const std::exception& e) {
        results[c].error = e.what();
      }
    }
  };
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return results;
}

const char* scheme_name(Scheme s) {
  return s == Scheme::EulerMaruyama ? "euler_maruyama" : "splitting";
}

const char* boundary_policy_name(BoundaryPolicy p) {
  return p == BoundaryPolicy::RejectStep ? "reject_step" : "halve_dt";
}

}  // namespace nhb
