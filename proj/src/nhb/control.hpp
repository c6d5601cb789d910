#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "nhb/model.hpp"

namespace nhb {

/// Membership query for the time-t support set reachable from `origin`.
struct SupportQuery {
  State origin;
  double horizon;  // t > 0
  State target;
};

struct ODistanceOptions {
  int segment_checks = 512;  // in-domain samples along a candidate segment
  int roadmap_nodes = 600;
  int roadmap_neighbors = 12;
  std::uint64_t seed = 99;
};

/// Domain distance between configurations in the mass-weighted norm
/// sqrt(sum m_c dq_c^2).  Exact for convex domains; otherwise an upper
/// bound via a straight segment or a probabilistic roadmap.
/// Throws UnreachableEstimateError when no in-domain path is found.
double o_distance(const Eigen::VectorXd& q, const Eigen::VectorXd& q_prime,
                  const Potential& pot, const SystemParams& params,
                  const ODistanceOptions& opts = {});

/// Least reachable thermostat value at position q' after time t:
///   xi + L^2_{q,q'} / (t a) - t kB T k N / a.
double min_xi(const State& x, double t, const Eigen::VectorXd& q_prime,
              const SystemParams& params, const Potential& pot,
              const ODistanceOptions& opts = {});

/// True iff the target lies in the (closed) support set of the time-t
/// transition from the origin.
bool support_member(const SupportQuery& query, const Potential& pot,
                    const SystemParams& params,
                    const ODistanceOptions& opts = {});

/// Piecewise-linear position path with mollified corners: the velocity is
/// constant per segment and ramps linearly across a window of width
/// `mollify` at each interior knot, so the acceleration exists and the
/// control read off the momentum equation is piecewise continuous.
class ControlPath {
 public:
  ControlPath(std::vector<double> knots,
              std::vector<Eigen::VectorXd> segment_velocities, double mollify,
              State start, State target, const SystemParams& params);

  double duration() const { return knots_.back(); }
  double delta() const;  // launch duration (first knot)
  double mollify_width() const { return mollify_; }
  const State& start() const { return start_; }
  const State& target() const { return target_; }
  const std::vector<double>& knots() const { return knots_; }

  Eigen::VectorXd position(double u) const;
  Eigen::VectorXd velocity(double u) const;
  Eigen::VectorXd acceleration(double u) const;

  /// int_0^u sum_c m_c v_c(s)^2 ds, exact (the velocity is piecewise linear).
  double energy_integral(double u) const;
  double total_energy() const { return energy_integral(duration()); }

  /// Thermostat profile along the path.
  double xi_at(double u, const SystemParams& params) const;

  /// Control eta(u) read off the momentum equation along the path.
  Eigen::VectorXd control_at(double u, const Potential& pot,
                             const SystemParams& params) const;

  /// Breakpoints of the piecewise-smooth structure (segment bodies and
  /// mollifier windows), for piecewise ODE integration.
  std::vector<double> smooth_breakpoints() const;

  /// Exact per-piece evaluation: the acceleration is discontinuous at the
  /// breakpoints, so piecewise integration must pin the one-sided branch.
  int n_pieces() const { return static_cast<int>(pieces_.size()); }
  double piece_start(int i) const { return pieces_[i].u0; }
  double piece_length(int i) const { return pieces_[i].u1 - pieces_[i].u0; }
  Eigen::VectorXd control_on_piece(int i, double local_s,
                                   const Potential& pot,
                                   const SystemParams& params) const;

 private:
  struct Piece {
    double u0, u1;           // time window
    Eigen::VectorXd v0, v1;  // velocity at the ends (linear in between)
    Eigen::VectorXd x0;      // position at u0
    double coef_a = 0.0;     // sum_c m_c v0_c^2
    double coef_b = 0.0;     // sum_c m_c v0_c (v1_c - v0_c)
    double coef_c = 0.0;     // sum_c m_c (v1_c - v0_c)^2
  };
  void build_pieces(const SystemParams& params);
  const Piece& piece_at(double u) const;

  std::vector<double> knots_;
  std::vector<Eigen::VectorXd> seg_v_;
  double mollify_;
  State start_, target_;
  std::vector<Piece> pieces_;
};

struct ControlBuildOptions {
  double delta = 0.0;          // 0: choose automatically
  std::optional<double> dwell_split;  // force the dwell family at this s
  double boundary_tol = 1e-7;  // acceptable xi shortfall for boundary targets
  double infeasible_tol = 1e-9;
};

/// Constructs a path from x to `target` in time t whose induced thermostat
/// endpoint matches target.xi:
///  - targets at the support boundary use the minimal-energy launch family
///    with a small delta,
///  - strictly interior targets solve for the dwell split s so the exact
///    energy integral matches the requirement.
/// Throws InfeasibleError when target.xi < min_xi - tol.
ControlPath build_control_path(const State& x, double t, const State& target,
                               const Potential& pot,
                               const SystemParams& params,
                               const ControlBuildOptions& opts = {});

struct ControlVerification {
  double err_q = 0.0;
  double err_p = 0.0;
  double err_xi = 0.0;
  double max_err = 0.0;
  long ode_steps = 0;
};

using ControlFn = std::function<Eigen::VectorXd(double)>;

/// RK4 integration of the deterministic control system
///   qdot = p/m, pdot = -xi p - (gamma/m) p - grad U + sqrt(2 gamma/beta) eta,
///   xidot = ||p||_m^2/a - kN/(a beta)
/// from x over [0, t].
State integrate_control_system(const State& x, double t,
                               const ControlFn& control, const Potential& pot,
                               const SystemParams& params, long n_steps);

/// Re-integrates the control system with the path's control and reports the
/// endpoint error per coordinate block.
ControlVerification verify_control(const ControlPath& path, const State& x,
                                   const Potential& pot,
                                   const SystemParams& params,
                                   long steps_per_piece = 400);

}  // namespace nhb
