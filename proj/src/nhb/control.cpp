#include "nhb/control.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <sstream>

#include "nhb/numerics.hpp"
#include "nhb/rng.hpp"

namespace nhb {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

// Singular varieties (pair coincidences) have measure zero, so membership
// sampling alone cannot see a segment crossing one; the energetic wall can.
constexpr double kPathEnergyCap = 1e10;

bool point_passable(const Eigen::VectorXd& q, const Potential& pot) {
  if (!pot.in_domain(q)) return false;
  const double u = pot.value(q);
  return std::isfinite(u) && u < kPathEnergyCap;
}

bool segment_in_domain(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                       const Potential& pot, int checks) {
  for (int i = 0; i <= checks; ++i) {
    const double s = static_cast<double>(i) / checks;
    if (!point_passable(a + s * (b - a), pot)) return false;
  }
  return true;
}

}  // namespace

double o_distance(const Eigen::VectorXd& q, const Eigen::VectorXd& q_prime,
                  const Potential& pot, const SystemParams& params,
                  const ODistanceOptions& opts) {
  if (!pot.in_domain(q) || !pot.in_domain(q_prime))
    throw ContractViolation("o_distance: endpoints must lie in the domain");
  const Eigen::VectorXd diff = q_prime - q;
  if (pot.convex_domain()) return config_norm(diff, params);
  if (segment_in_domain(q, q_prime, pot, opts.segment_checks))
    return config_norm(diff, params);

  // Probabilistic roadmap: an upper bound on the domain distance.
  const int d = pot.dof();
  std::vector<Eigen::VectorXd> nodes = {q, q_prime};
  Eigen::VectorXd lo = q.cwiseMin(q_prime), hi = q.cwiseMax(q_prime);
  const double margin = std::max(1.0, 2.0 * diff.cwiseAbs().maxCoeff());
  lo.array() -= margin;
  hi.array() += margin;
  Pcg64 rng(opts.seed);
  int attempts = 0;
  while (static_cast<int>(nodes.size()) < opts.roadmap_nodes + 2 &&
         attempts < opts.roadmap_nodes * 50) {
    ++attempts;
    Eigen::VectorXd cand(d);
    for (int c = 0; c < d; ++c) cand[c] = rng.uniform(lo[c], hi[c]);
    if (point_passable(cand, pot)) nodes.push_back(std::move(cand));
  }
  const int n = static_cast<int>(nodes.size());
  std::vector<std::vector<std::pair<int, double>>> adj(n);
  for (int i = 0; i < n; ++i) {
    std::vector<std::pair<double, int>> dist;
    dist.reserve(n - 1);
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      dist.emplace_back(config_norm(nodes[j] - nodes[i], params), j);
    }
    const int kn = std::min<int>(opts.roadmap_neighbors, dist.size());
    std::partial_sort(dist.begin(), dist.begin() + kn, dist.end());
    for (int e = 0; e < kn; ++e) {
      const int j = dist[e].second;
      if (segment_in_domain(nodes[i], nodes[j], pot, 64))
        adj[i].emplace_back(j, dist[e].first);
    }
  }
  std::vector<double> best(n, kInf);
  best[0] = 0.0;
  using Entry = std::pair<double, int>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
  heap.emplace(0.0, 0);
  while (!heap.empty()) {
    const auto [cost, i] = heap.top();
    heap.pop();
    if (cost > best[i]) continue;
    if (i == 1) return cost;
    for (const auto& [j, w] : adj[i]) {
      if (cost + w < best[j]) {
        best[j] = cost + w;
        heap.emplace(best[j], j);
      }
    }
  }
  throw UnreachableEstimateError(
      "o_distance: no in-domain path found within the roadmap budget");
}

double min_xi(const State& x, double t, const Eigen::VectorXd& q_prime,
              const SystemParams& params, const Potential& pot,
              const ODistanceOptions& opts) {
  if (!(t > 0.0)) throw ContractViolation("min_xi: horizon must be positive");
  const double len = o_distance(x.q, q_prime, pot, params, opts);
  const double kn = static_cast<double>(params.dim()) * params.particles();
  return x.xi + len * len / (t * params.aux_a()) -
         t * params.kBT() * kn / params.aux_a();
}

bool support_member(const SupportQuery& query, const Potential& pot,
                    const SystemParams& params, const ODistanceOptions& opts) {
  if (!(query.horizon > 0.0))
    throw ContractViolation("support_member: horizon must be positive");
  if (!pot.in_domain(query.origin.q))
    throw ContractViolation("support_member: origin outside the domain");
  if (!query.target.finite() || !pot.in_domain(query.target.q)) return false;
  const double floor =
      min_xi(query.origin, query.horizon, query.target.q, params, pot, opts);
  return query.target.xi >= floor;
}

ControlPath::ControlPath(std::vector<double> knots,
                         std::vector<Eigen::VectorXd> segment_velocities,
                         double mollify, State start, State target,
                         const SystemParams& params)
    : knots_(std::move(knots)),
      seg_v_(std::move(segment_velocities)),
      mollify_(mollify),
      start_(std::move(start)),
      target_(std::move(target)) {
  if (knots_.size() < 2 || seg_v_.size() + 1 != knots_.size())
    throw ContractViolation("control path: knot/velocity count mismatch");
  for (std::size_t i = 1; i < knots_.size(); ++i)
    if (!(knots_[i] > knots_[i - 1]))
      throw ContractViolation("control path: knots must increase");
  build_pieces(params);
}

double ControlPath::delta() const { return knots_.size() > 1 ? knots_[1] : 0.0; }

void ControlPath::build_pieces(const SystemParams& params) {
  const std::size_t m = seg_v_.size();
  // Half-width of the blend window at each interior knot.
  std::vector<double> w(m + 1, 0.0);
  for (std::size_t k = 1; k < m; ++k) {
    const double len_prev = knots_[k] - knots_[k - 1];
    const double len_next = knots_[k + 1] - knots_[k];
    w[k] = std::min({0.5 * mollify_, 0.4 * len_prev, 0.4 * len_next});
  }
  Eigen::VectorXd pos = start_.q;
  double u_cursor = knots_.front();
  pieces_.clear();
  const auto push_piece = [&](double u1, const Eigen::VectorXd& v0,
                              const Eigen::VectorXd& v1) {
    if (!(u1 > u_cursor)) return;
    Piece piece;
    piece.u0 = u_cursor;
    piece.u1 = u1;
    piece.v0 = v0;
    piece.v1 = v1;
    piece.x0 = pos;
    for (int c = 0; c < v0.size(); ++c) {
      const double m = params.mass_of_coord(c);
      const double dv = v1[c] - v0[c];
      piece.coef_a += m * v0[c] * v0[c];
      piece.coef_b += m * v0[c] * dv;
      piece.coef_c += m * dv * dv;
    }
    const double len = u1 - u_cursor;
    pos += 0.5 * len * (v0 + v1);  // exact: the velocity is linear in tau
    u_cursor = u1;
    pieces_.push_back(std::move(piece));
  };
  for (std::size_t seg = 0; seg < m; ++seg) {
    const double body_end = (seg + 1 < m) ? knots_[seg + 1] - w[seg + 1]
                                          : knots_[seg + 1];
    push_piece(body_end, seg_v_[seg], seg_v_[seg]);
    if (seg + 1 < m)
      push_piece(knots_[seg + 1] + w[seg + 1], seg_v_[seg], seg_v_[seg + 1]);
  }
}

const ControlPath::Piece& ControlPath::piece_at(double u) const {
  if (u <= pieces_.front().u0) return pieces_.front();
  for (const auto& piece : pieces_)
    if (u <= piece.u1) return piece;
  return pieces_.back();
}

Eigen::VectorXd ControlPath::velocity(double u) const {
  const Piece& piece = piece_at(u);
  const double len = piece.u1 - piece.u0;
  const double s = std::clamp((u - piece.u0) / len, 0.0, 1.0);
  return piece.v0 + s * (piece.v1 - piece.v0);
}

Eigen::VectorXd ControlPath::acceleration(double u) const {
  const Piece& piece = piece_at(u);
  return (piece.v1 - piece.v0) / (piece.u1 - piece.u0);
}

Eigen::VectorXd ControlPath::position(double u) const {
  const Piece& piece = piece_at(u);
  const double s = std::clamp(u - piece.u0, 0.0, piece.u1 - piece.u0);
  const double len = piece.u1 - piece.u0;
  return piece.x0 + s * piece.v0 +
         0.5 * s * s / len * (piece.v1 - piece.v0);
}

double ControlPath::energy_integral(double u) const {
  double total = 0.0;
  for (std::size_t i = 0; i < pieces_.size(); ++i) {
    const Piece& piece = pieces_[i];
    if (u <= piece.u0) break;
    const double len = piece.u1 - piece.u0;
    const double s = std::min(u - piece.u0, len);
    // v(tau) = v0 + (tau/len) dv gives
    // int_0^s sum_c m_c v_c^2 = A s + B s^2/len + C s^3/(3 len^2).
    total += piece.coef_a * s + piece.coef_b * s * s / len +
             piece.coef_c * s * s * s / (3.0 * len * len);
  }
  return total;
}

double ControlPath::xi_at(double u, const SystemParams& params) const {
  const double kn = static_cast<double>(params.dim()) * params.particles();
  return start_.xi + (energy_integral(u) - u * kn / params.beta()) /
                         params.aux_a();
}

Eigen::VectorXd ControlPath::control_at(double u, const Potential& pot,
                                        const SystemParams& params) const {
  const Eigen::VectorXd q = position(u);
  const Eigen::VectorXd v = velocity(u);
  const Eigen::VectorXd acc = acceleration(u);
  const Eigen::VectorXd grad = pot.gradient(q);
  const double xi = xi_at(u, params);
  const double amp = std::sqrt(2.0 * params.gamma() / params.beta());
  Eigen::VectorXd eta(v.size());
  for (int c = 0; c < v.size(); ++c) {
    const double m = params.mass_of_coord(c);
    const double p = m * v[c];
    const double pdot = m * acc[c];
    eta[c] = (pdot + xi * p + params.gamma() / m * p + grad[c]) / amp;
  }
  return eta;
}

std::vector<double> ControlPath::smooth_breakpoints() const {
  std::vector<double> pts;
  pts.push_back(pieces_.front().u0);
  for (const auto& piece : pieces_) pts.push_back(piece.u1);
  return pts;
}

Eigen::VectorXd ControlPath::control_on_piece(int i, double local_s,
                                              const Potential& pot,
                                              const SystemParams& params) const {
  const Piece& piece = pieces_[i];
  const double len = piece.u1 - piece.u0;
  const double s = std::clamp(local_s, 0.0, len);
  const Eigen::VectorXd v = piece.v0 + (s / len) * (piece.v1 - piece.v0);
  const Eigen::VectorXd acc = (piece.v1 - piece.v0) / len;
  const Eigen::VectorXd q =
      piece.x0 + s * piece.v0 + 0.5 * s * s / len * (piece.v1 - piece.v0);
  const Eigen::VectorXd grad = pot.gradient(q);
  const double xi = xi_at(piece.u0 + s, params);
  const double amp = std::sqrt(2.0 * params.gamma() / params.beta());
  Eigen::VectorXd eta(v.size());
  for (int c = 0; c < v.size(); ++c) {
    const double m = params.mass_of_coord(c);
    eta[c] = (m * acc[c] + xi * m * v[c] + params.gamma() * v[c] + grad[c]) /
             amp;
  }
  return eta;
}

namespace {

Eigen::VectorXd velocity_of(const Eigen::VectorXd& p,
                            const SystemParams& params) {
  Eigen::VectorXd v(p.size());
  for (int c = 0; c < p.size(); ++c) v[c] = p[c] / params.mass_of_coord(c);
  return v;
}

// No-dwell family: launch delta, straight middle, arrival delta.
ControlPath make_no_dwell(const State& x, double t, const State& target,
                          double delta, const SystemParams& params) {
  const Eigen::VectorXd v = velocity_of(x.p, params);
  const Eigen::VectorXd vp = velocity_of(target.p, params);
  const Eigen::VectorXd mid =
      (target.q - delta * vp - x.q - delta * v) / (t - 2.0 * delta);
  return ControlPath({0.0, delta, t - delta, t}, {v, mid, vp}, delta / 10.0,
                     x, target, params);
}

// Dwell family: launch, straight middle reaching the pre-arrival point at
// time s - delta, hold, arrival.
ControlPath make_dwell(const State& x, double t, const State& target,
                       double delta, double s, const SystemParams& params) {
  const Eigen::VectorXd v = velocity_of(x.p, params);
  const Eigen::VectorXd vp = velocity_of(target.p, params);
  const Eigen::VectorXd hold = Eigen::VectorXd::Zero(x.q.size());
  const Eigen::VectorXd mid =
      (target.q - delta * vp - x.q - delta * v) / (s - 2.0 * delta);
  return ControlPath({0.0, delta, s - delta, t - delta, t},
                     {v, mid, hold, vp}, delta / 10.0, x, target, params);
}

// Out-and-back family for targets whose middle displacement degenerates:
// travel distance r along `dir` and return, then dwell, then arrive.
ControlPath make_excursion(const State& x, double t, const State& target,
                           double delta, double s, double r,
                           const Eigen::VectorXd& dir,
                           const SystemParams& params) {
  const Eigen::VectorXd v = velocity_of(x.p, params);
  const Eigen::VectorXd vp = velocity_of(target.p, params);
  const Eigen::VectorXd hold = Eigen::VectorXd::Zero(x.q.size());
  const double half = 0.5 * (s - 2.0 * delta);
  const Eigen::VectorXd far = x.q + delta * v + r * dir;
  const Eigen::VectorXd pre = target.q - delta * vp;
  const Eigen::VectorXd out = (far - x.q - delta * v) / half;
  const Eigen::VectorXd back = (pre - far) / half;
  return ControlPath({0.0, delta, delta + half, s - delta, t - delta, t},
                     {v, out, back, hold, vp}, delta / 10.0, x, target,
                     params);
}

void check_path_in_domain(const ControlPath& path, const Potential& pot) {
  const double t = path.duration();
  for (int i = 0; i <= 1024; ++i) {
    const double u = t * i / 1024.0;
    if (!pot.in_domain(path.position(u)))
      throw InfeasibleError(
          "control path: constructed curve leaves the domain");
  }
}

}  // namespace

ControlPath build_control_path(const State& x, double t, const State& target,
                               const Potential& pot,
                               const SystemParams& params,
                               const ControlBuildOptions& opts) {
  if (!(t > 0.0)) throw ContractViolation("build_control_path: t must be positive");
  if (!pot.in_domain(x.q) || !pot.in_domain(target.q))
    throw ContractViolation("build_control_path: endpoints must lie in the domain");
  if (!x.finite() || !target.finite())
    throw ContractViolation("build_control_path: non-finite endpoint state");

  const double kn = static_cast<double>(params.dim()) * params.particles();
  const double a = params.aux_a();
  const double len = o_distance(x.q, target.q, pot, params);
  // Required energy integral: int sum m v^2 = a (xi' - xi) + t kN/beta.
  const double e_req = a * (target.xi - x.xi) + t * kn / params.beta();
  const double e_floor = len * len / t;
  const double scale = std::max({1.0, std::abs(e_req), e_floor});
  if (e_req < e_floor - opts.infeasible_tol * scale) {
    std::ostringstream os;
    os << "build_control_path: target xi' = " << target.xi
       << " lies below the reachable minimum "
       << x.xi + e_floor / a - t * kn / (a * params.beta());
    throw InfeasibleError(os.str());
  }

  double delta = (opts.delta > 0.0) ? opts.delta : 1e-3 * t;

  const auto finish = [&](ControlPath path) {
    check_path_in_domain(path, pot);
    return path;
  };

  if (opts.dwell_split) {
    const double s = *opts.dwell_split;
    if (!(s > 2.0 * delta && s <= t - 2.0 * delta))
      throw ContractViolation("build_control_path: dwell split outside (2 delta, t - 2 delta]");
    return finish(make_dwell(x, t, target, delta, s, params));
  }

  // Boundary-minimal targets: shrink delta until the no-dwell energy gap
  // is inside tolerance.  The no-dwell energy tends to L^2/t as delta -> 0.
  const auto no_dwell_energy = [&](double d) {
    return make_no_dwell(x, t, target, d, params).total_energy();
  };
  {
    const double gap0 = e_req - e_floor;
    if (gap0 <= a * opts.boundary_tol) {
      double d = delta;
      for (int it = 0; it < 60; ++it) {
        const double achieved = no_dwell_energy(d);
        if (std::abs(achieved - e_req) <= a * opts.boundary_tol)
          return finish(make_no_dwell(x, t, target, d, params));
        d *= 0.5;
        if (d < 1e-12 * t) break;
      }
      return finish(make_no_dwell(x, t, target, d * 2.0, params));
    }
  }

  // Strictly interior: solve the dwell split s with the exact energy of the
  // mollified path.  E(s) decreases in s; E(s -> 2 delta) -> infinity.
  const Eigen::VectorXd mid_disp =
      target.q - delta * velocity_of(target.p, params) - x.q -
      delta * velocity_of(x.p, params);
  const double mid_len = config_norm(mid_disp, params);
  if (mid_len > 1e-9 * std::max(1.0, config_norm(x.q, params))) {
    const double s_hi = t - 2.0 * delta;
    const auto dwell_energy = [&](double s) {
      return make_dwell(x, t, target, delta, s, params).total_energy();
    };
    if (dwell_energy(s_hi) >= e_req) {
      // Not enough dwell room to burn the requested energy: the no-dwell
      // family covers it by widening delta instead.
      double d_lo = delta, d_hi = 0.45 * t;
      if (no_dwell_energy(d_hi) < e_req)
        throw InfeasibleError("build_control_path: energy target not bracketed");
      const double d = brent_root(
          [&](double dd) { return no_dwell_energy(dd) - e_req; }, d_lo, d_hi,
          1e-14 * t);
      return finish(make_no_dwell(x, t, target, d, params));
    }
    double s_lo = s_hi;
    for (int it = 0; it < 200; ++it) {
      s_lo = 2.0 * delta + 0.5 * (s_lo - 2.0 * delta);
      if (dwell_energy(s_lo) > e_req) break;
    }
    const double s = brent_root(
        [&](double ss) { return dwell_energy(ss) - e_req; }, s_lo, s_hi,
        1e-14 * t);
    return finish(make_dwell(x, t, target, delta, s, params));
  }

  // Degenerate middle displacement: out-and-back excursion, radius solved
  // to meet the energy requirement.
  Eigen::VectorXd dir = Eigen::VectorXd::Zero(x.q.size());
  dir[0] = 1.0;
  const double s = std::max(0.5 * t, 4.0 * delta + 1e-3 * t);
  const auto exc_energy = [&](double r) {
    return make_excursion(x, t, target, delta, s, r, dir, params)
        .total_energy();
  };
  double r_hi = 1.0;
  for (int it = 0; it < 200 && exc_energy(r_hi) < e_req; ++it) r_hi *= 2.0;
  if (exc_energy(0.0) > e_req) {
    // Even the zero-radius excursion overshoots: fall back to the boundary
    // treatment with a smaller delta.
    double d = delta;
    for (int it = 0; it < 60; ++it) {
      d *= 0.5;
      if (std::abs(no_dwell_energy(d) - e_req) <= a * opts.boundary_tol)
        break;
    }
    return finish(make_no_dwell(x, t, target, d, params));
  }
  const double r = brent_root(
      [&](double rr) { return exc_energy(rr) - e_req; }, 0.0, r_hi, 1e-14);
  return finish(make_excursion(x, t, target, delta, s, r, dir, params));
}

State integrate_control_system(const State& x, double t,
                               const ControlFn& control, const Potential& pot,
                               const SystemParams& params, long n_steps) {
  if (!(t > 0.0) || n_steps < 1)
    throw ContractViolation("integrate_control_system: bad horizon or steps");
  const double kn = static_cast<double>(params.dim()) * params.particles();
  const double a = params.aux_a();
  const double amp = std::sqrt(2.0 * params.gamma() / params.beta());
  const int d = params.dof();

  struct Deriv {
    Eigen::VectorXd dq, dp;
    double dxi;
  };
  const auto rhs = [&](double u, const Eigen::VectorXd& q,
                       const Eigen::VectorXd& p, double xi) {
    Deriv out;
    out.dq.resize(d);
    out.dp.resize(d);
    if (!pot.in_domain(q)) {
      std::ostringstream os;
      os << "control integration left the domain at u = " << u;
      throw NumericError(os.str());
    }
    const Eigen::VectorXd grad = pot.gradient(q);
    const Eigen::VectorXd eta = control(u);
    for (int c = 0; c < d; ++c) {
      const double m = params.mass_of_coord(c);
      out.dq[c] = p[c] / m;
      out.dp[c] = -xi * p[c] - params.gamma() / m * p[c] - grad[c] +
                  amp * eta[c];
    }
    out.dxi = (kinetic_norm_sq(p, params) - kn / params.beta()) / a;
    return out;
  };

  Eigen::VectorXd q = x.q, p = x.p;
  double xi = x.xi;
  const double h = t / n_steps;
  for (long i = 0; i < n_steps; ++i) {
    const double u = i * h;
    const Deriv k1 = rhs(u, q, p, xi);
    const Deriv k2 = rhs(u + 0.5 * h, q + 0.5 * h * k1.dq, p + 0.5 * h * k1.dp,
                         xi + 0.5 * h * k1.dxi);
    const Deriv k3 = rhs(u + 0.5 * h, q + 0.5 * h * k2.dq, p + 0.5 * h * k2.dp,
                         xi + 0.5 * h * k2.dxi);
    const Deriv k4 =
        rhs(u + h, q + h * k3.dq, p + h * k3.dp, xi + h * k3.dxi);
    q += h / 6.0 * (k1.dq + 2.0 * k2.dq + 2.0 * k3.dq + k4.dq);
    p += h / 6.0 * (k1.dp + 2.0 * k2.dp + 2.0 * k3.dp + k4.dp);
    xi += h / 6.0 * (k1.dxi + 2.0 * k2.dxi + 2.0 * k3.dxi + k4.dxi);
  }
  State out;
  out.q = q;
  out.p = p;
  out.xi = xi;
  return out;
}

ControlVerification verify_control(const ControlPath& path, const State& x,
                                   const Potential& pot,
                                   const SystemParams& params,
                                   long steps_per_piece) {
  State s = x;
  ControlVerification out;
  const double total = path.duration();
  for (int i = 0; i < path.n_pieces(); ++i) {
    const double len = path.piece_length(i);
    const long n = std::max<long>(
        16, static_cast<long>(steps_per_piece * len / total) + 16);
    s = integrate_control_system(
        s, len,
        [&](double u) { return path.control_on_piece(i, u, pot, params); },
        pot, params, n);
    out.ode_steps += n;
  }
  const State& target = path.target();
  out.err_q = (s.q - target.q).cwiseAbs().maxCoeff();
  out.err_p = (s.p - target.p).cwiseAbs().maxCoeff();
  out.err_xi = std::abs(s.xi - target.xi);
  out.max_err = std::max({out.err_q, out.err_p, out.err_xi});
  return out;
}

}  // namespace nhb
