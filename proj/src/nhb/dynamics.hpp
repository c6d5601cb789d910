#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nhb/model.hpp"

namespace nhb {

enum class Scheme { EulerMaruyama, Splitting };
enum class BoundaryPolicy { RejectStep, HalveDt };

struct IntegratorConfig {
  Scheme scheme = Scheme::Splitting;
  double dt = 1e-3;
  long n_steps = 0;
  std::uint64_t seed = 0;
  BoundaryPolicy boundary_policy = BoundaryPolicy::HalveDt;
  int max_halvings = 30;
  int max_rejects = 1000;
  long thinning = 1;  // store every thinning-th step

  void validate() const;
};

/// Discrete trajectory with per-snapshot audit sums.  The sums make the
/// pathwise thermostat identity and the arc-length support bound checkable
/// without retaining every step:
///   xi_n = xi_0 + (sum_wkin - sum_w * kN/beta) / a            (exact)
///   xi_n >= xi_0 + sum_warc^2 / (a sum_w) - sum_w kN/(a beta) (Cauchy-Schwarz)
struct Trajectory {
  std::vector<double> times;
  std::vector<State> states;
  std::vector<double> sum_w;     // cumulative quadrature weight (elapsed time)
  std::vector<double> sum_wkin;  // cumulative sum of w * ||p||_m^2
  std::vector<double> sum_warc;  // cumulative sum of w * ||p||_m
  std::vector<std::uint64_t> brownian_increments_consumed;
  long total_steps = 0;
  double dt = 0.0;
  Scheme scheme = Scheme::EulerMaruyama;

  std::size_t size() const { return states.size(); }
  const State& back() const { return states.back(); }
};

/// One Euler-Maruyama step.  The thermostat update uses the pre-step
/// momentum, making the discrete xi identity exact.
/// Throws DomainError when the position update leaves O.
State step_euler_maruyama(const State& x, double dt,
                          std::span<const double> noise, const Potential& pot,
                          const SystemParams& params);

/// One step of the Strang-type splitting
///   xi/2 - B/2 - O - A - B/2 - xi/2
/// where B is the exact momentum drift with frozen (xi, grad U), O the
/// exact Ornstein-Uhlenbeck fluctuation kick with frozen coefficient,
/// A the exact position drift, and the xi halves the trapezoid quadrature
/// of ||p||_m^2 over the step.
State step_splitting(const State& x, double dt, std::span<const double> noise,
                     const Potential& pot, const SystemParams& params);

/// Deterministic simulation: increments for (chain, step, attempt) come
/// from a counter-based stream, so equal seeds give bitwise-equal output
/// regardless of scheduling.
Trajectory simulate(const State& x0, const IntegratorConfig& config,
                    const Potential& pot, const SystemParams& params,
                    std::uint64_t chain_id = 0);

struct ChainResult {
  std::optional<Trajectory> trajectory;
  std::string error;  // empty on success
};

/// Independent chains with per-chain streams; errors are collected and the
/// run continues.  Results are indexed by chain and independent of the
/// number of worker threads.
std::vector<ChainResult> ensemble_run(const std::vector<State>& x0s,
                                      const IntegratorConfig& config,
                                      const Potential& pot,
                                      const SystemParams& params,
                                      int n_threads = 0);

const char* scheme_name(Scheme s);
const char* boundary_policy_name(BoundaryPolicy p);

}  // namespace nhb
