#include "nhb/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "nhb/numerics.hpp"

namespace nhb {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double gaussian_cdf(double x, double sigma) {
  return 0.5 * std::erfc(-x / (sigma * std::sqrt(2.0)));
}

}  // namespace

GibbsModel::GibbsModel(PotentialHandle pot, SystemParams params)
    : pot_(std::move(pot)), params_(std::move(params)) {
  if (!pot_) throw ContractViolation("gibbs: null potential");
  if (pot_->dof() != params_.dof())
    throw ContractViolation("gibbs: potential/system dimension mismatch");
  const double beta = params_.beta();

  if (pot_->dof() == 1) {
    // Expand the box until the Boltzmann factor is negligible at the edge.
    double box = 4.0;
    const auto weight = [&](double x) {
      Eigen::VectorXd q(1);
      q << x;
      if (!pot_->in_domain(q)) return 0.0;
      const double u = pot_->value(q);
      return std::isfinite(u) ? std::exp(-beta * u) : 0.0;
    };
    Eigen::VectorXd probe(1);
    for (; box <= 1u << 20; box *= 2.0) {
      probe << box;
      const double u_hi = pot_->in_domain(probe) ? pot_->value(probe) : kInf;
      probe << -box;
      const double u_lo = pot_->in_domain(probe) ? pot_->value(probe) : kInf;
      if (std::min(u_hi, u_lo) * beta > 50.0) break;
    }
    q_box_ = box;
    const double zq = adaptive_simpson(weight, -box, box, 1e-12);
    if (!(zq > 0.0) || !std::isfinite(zq))
      throw NumericError("gibbs: position normalization failed");
    log_zq_ = std::log(zq);

    // Marginal CDF on a dense grid, trapezoid-accumulated.
    const int n = 8001;
    q_cdf_grid_.resize(n);
    q_cdf_values_.resize(n);
    const double h = 2.0 * box / (n - 1);
    double acc = 0.0;
    double prev = weight(-box);
    q_cdf_grid_[0] = -box;
    q_cdf_values_[0] = 0.0;
    for (int i = 1; i < n; ++i) {
      const double x = -box + i * h;
      const double cur = weight(x);
      acc += 0.5 * h * (prev + cur);
      prev = cur;
      q_cdf_grid_[i] = x;
      q_cdf_values_[i] = acc;
    }
    for (int i = 0; i < n; ++i) q_cdf_values_[i] /= acc;
  } else if (pot_->dof() == 2) {
    double box = 4.0;
    Eigen::VectorXd probe(2);
    for (; box <= 4096.0; box *= 2.0) {
      probe << box, box;
      const double u = pot_->in_domain(probe) ? pot_->value(probe) : kInf;
      if (u * beta > 50.0) break;
    }
    q_box_ = box;
    const auto weight2 = [&](double x, double y) {
      Eigen::VectorXd q(2);
      q << x, y;
      if (!pot_->in_domain(q)) return 0.0;
      const double u = pot_->value(q);
      return std::isfinite(u) ? std::exp(-beta * u) : 0.0;
    };
    const auto inner = [&](double x) {
      return gauss_panel_integrate([&](double y) { return weight2(x, y); },
                                   -box, box, 40, 24);
    };
    const double zq = gauss_panel_integrate(inner, -box, box, 40, 24);
    if (!(zq > 0.0) || !std::isfinite(zq))
      throw NumericError("gibbs: position normalization failed");
    log_zq_ = std::log(zq);
  }

  if (log_zq_) {
    double lz = *log_zq_;
    const double two_pi = 2.0 * M_PI;
    for (int i = 0; i < params_.particles(); ++i)
      lz += 0.5 * params_.dim() * std::log(two_pi * params_.mass()[i] / beta);
    lz += 0.5 * std::log(two_pi / (params_.aux_a() * beta));
    log_z_ = lz;
  }
}

double GibbsModel::log_z() const {
  if (!log_z_)
    throw NumericError("gibbs: log Z unavailable for dof > 2");
  return *log_z_;
}

double GibbsModel::log_density(const State& x) const {
  if (!pot_->in_domain(x.q)) return -kInf;
  const double u = pot_->value(x.q);
  if (!std::isfinite(u)) return -kInf;
  const double h = kinetic_energy(x.p, params_) + u +
                   0.5 * params_.aux_a() * x.xi * x.xi;
  return -params_.beta() * h - log_z();
}

double GibbsModel::q_marginal_cdf(double x) const {
  if (q_cdf_grid_.empty())
    throw NumericError("gibbs: q-marginal CDF needs dof == 1");
  if (x <= q_cdf_grid_.front()) return 0.0;
  if (x >= q_cdf_grid_.back()) return 1.0;
  const auto it =
      std::upper_bound(q_cdf_grid_.begin(), q_cdf_grid_.end(), x);
  const std::size_t j = static_cast<std::size_t>(it - q_cdf_grid_.begin());
  const double x0 = q_cdf_grid_[j - 1], x1 = q_cdf_grid_[j];
  const double y0 = q_cdf_values_[j - 1], y1 = q_cdf_values_[j];
  return y0 + (y1 - y0) * (x - x0) / (x1 - x0);
}

double GibbsModel::p_marginal_cdf(double x, int coord) const {
  const double sigma =
      std::sqrt(params_.mass_of_coord(coord) * params_.kBT());
  return gaussian_cdf(x, sigma);
}

double GibbsModel::xi_marginal_cdf(double x) const {
  const double sigma = std::sqrt(params_.kBT() / params_.aux_a());
  return gaussian_cdf(x, sigma);
}

double GibbsModel::q_expectation(
    const std::function<double(double)>& f) const {
  if (pot_->dof() != 1)
    throw NumericError("gibbs: q_expectation needs dof == 1");
  const double beta = params_.beta();
  const auto weight = [&](double x) {
    Eigen::VectorXd q(1);
    q << x;
    const double u = pot_->value(q);
    return std::isfinite(u) ? std::exp(-beta * u) : 0.0;
  };
  const double num = adaptive_simpson(
      [&](double x) { return f(x) * weight(x); }, -q_box_, q_box_, 1e-11);
  return num / std::exp(*log_zq_);
}

double ks_distance(std::vector<double> samples,
                   const std::function<double(double)>& cdf) {
  if (samples.empty()) throw ContractViolation("ks_distance: empty sample");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  std::size_t i = 0;
  while (i < samples.size()) {
    std::size_t j = i;
    while (j < samples.size() && samples[j] == samples[i]) ++j;
    const double value = samples[i];
    const double f_lo = static_cast<double>(i) / n;       // F_hat just below
    const double f_hi = static_cast<double>(j) / n;       // F_hat at value
    const double c_at = cdf(value);
    const double c_below =
        cdf(std::nextafter(value, -std::numeric_limits<double>::infinity()));
    d = std::max(d, std::abs(c_at - f_hi));
    d = std::max(d, std::abs(c_below - f_lo));
    i = j;
  }
  return d;
}

double temperature_estimate(const Trajectory& traj,
                            const SystemParams& params) {
  if (traj.states.empty())
    throw ContractViolation("temperature_estimate: empty trajectory");
  const double kn = static_cast<double>(params.dim()) * params.particles();
  if (traj.states.size() == 1)
    return kinetic_norm_sq(traj.states[0].p, params) / kn;
  const auto avg = ergodic_average(
      [&](const State& x) { return kinetic_norm_sq(x.p, params) / kn; }, traj);
  return avg.value;
}

ErgodicAverage ergodic_average(const std::function<double(const State&)>& f,
                               const Trajectory& traj) {
  const std::size_t n = traj.states.size();
  if (n < 2) throw ContractViolation("ergodic_average: need >= 2 states");
  std::vector<double> w(n), v(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t_lo = (i == 0) ? traj.times[0] : traj.times[i - 1];
    const double t_hi = (i + 1 == n) ? traj.times[n - 1] : traj.times[i + 1];
    w[i] = 0.5 * (t_hi - t_lo);
    v[i] = f(traj.states[i]);
  }
  const double total_w = std::accumulate(w.begin(), w.end(), 0.0);
  ErgodicAverage out;
  out.n = static_cast<long>(n);
  if (total_w <= 0.0) {
    // Degenerate time stamps: plain mean.
    out.value = std::accumulate(v.begin(), v.end(), 0.0) / n;
    return out;
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += w[i] * v[i];
  out.value = acc / total_w;

  // Batch means on the index range.
  const int batches = static_cast<int>(std::clamp<std::size_t>(n / 4, 2, 30));
  if (n >= 8) {
    std::vector<double> means;
    const std::size_t per = n / batches;
    for (int b = 0; b < batches; ++b) {
      const std::size_t lo = b * per;
      const std::size_t hi = (b + 1 == batches) ? n : lo + per;
      double ws = 0.0, vs = 0.0;
      for (std::size_t i = lo; i < hi; ++i) {
        ws += w[i];
        vs += w[i] * v[i];
      }
      if (ws > 0.0) means.push_back(vs / ws);
    }
    if (means.size() >= 2) {
      const double m = std::accumulate(means.begin(), means.end(), 0.0) /
                       means.size();
      double var = 0.0;
      for (double x : means) var += (x - m) * (x - m);
      var /= (means.size() - 1);
      out.std_error = std::sqrt(var / means.size());
    }
  }
  return out;
}

namespace {

struct Histogram2D {
  double q_lo, q_width;
  double p_lo, p_width;
  int nq, np;

  int index(double q, double p) const {
    int iq = static_cast<int>(std::floor((q - q_lo) / q_width));
    int ip = static_cast<int>(std::floor((p - p_lo) / p_width));
    iq = std::clamp(iq, 0, nq - 1);
    ip = std::clamp(ip, 0, np - 1);
    return iq * np + ip;
  }
};

double iqr(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto at = [&](double f) {
    const double idx = f * (v.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(idx);
    const double frac = idx - lo;
    return (lo + 1 < v.size()) ? v[lo] * (1 - frac) + v[lo + 1] * frac : v[lo];
  };
  return at(0.75) - at(0.25);
}

double fd_width(const std::vector<double>& v) {
  const double r = iqr(v);
  return 2.0 * r / std::cbrt(static_cast<double>(v.size()));
}

}  // namespace

TvDecay tv_decay(const std::vector<std::vector<State>>& ensemble_a,
                 const std::vector<std::vector<State>>& ensemble_b,
                 const std::vector<double>& times) {
  if (ensemble_a.size() != times.size() || ensemble_b.size() != times.size())
    throw ContractViolation("tv_decay: snapshot count mismatch");
  if (times.empty()) throw ContractViolation("tv_decay: no snapshots");
  TvDecay out;
  for (std::size_t ti = 0; ti < times.size(); ++ti) {
    const auto& sa = ensemble_a[ti];
    const auto& sb = ensemble_b[ti];
    if (sa.size() != sb.size() || sa.empty())
      throw ContractViolation("tv_decay: ensembles must have equal nonzero size");
    std::vector<double> qs, ps;
    qs.reserve(2 * sa.size());
    ps.reserve(2 * sa.size());
    for (const auto& x : sa) { qs.push_back(x.q[0]); ps.push_back(x.p[0]); }
    for (const auto& x : sb) { qs.push_back(x.q[0]); ps.push_back(x.p[0]); }
    const auto [q_min_it, q_max_it] = std::minmax_element(qs.begin(), qs.end());
    const auto [p_min_it, p_max_it] = std::minmax_element(ps.begin(), ps.end());
    const double q_range = *q_max_it - *q_min_it;
    const double p_range = *p_max_it - *p_min_it;
    double tv = 0.0;
    if (q_range == 0.0 && p_range == 0.0) {
      tv = 0.0;  // both ensembles collapsed onto one point
    } else {
      double wq = fd_width(qs), wp = fd_width(ps);
      if (!(wq > 0.0)) wq = (q_range > 0.0) ? q_range / 50.0 : 1.0;
      if (!(wp > 0.0)) wp = (p_range > 0.0) ? p_range / 50.0 : 1.0;
      Histogram2D h;
      h.nq = std::clamp(static_cast<int>(std::ceil(q_range / wq)) + 1, 2, 160);
      h.np = std::clamp(static_cast<int>(std::ceil(p_range / wp)) + 1, 2, 160);
      h.q_lo = *q_min_it;
      h.p_lo = *p_min_it;
      h.q_width = (q_range > 0.0) ? q_range / h.nq * (1.0 + 1e-12) : 1.0;
      h.p_width = (p_range > 0.0) ? p_range / h.np * (1.0 + 1e-12) : 1.0;
      if (!(h.q_width > 0.0) || !(h.p_width > 0.0))
        throw NumericError("tv_decay: degenerate binning");
      std::vector<double> ca(h.nq * h.np, 0.0), cb(h.nq * h.np, 0.0);
      for (const auto& x : sa) ca[h.index(x.q[0], x.p[0])] += 1.0;
      for (const auto& x : sb) cb[h.index(x.q[0], x.p[0])] += 1.0;
      const double n = static_cast<double>(sa.size());
      for (std::size_t bin = 0; bin < ca.size(); ++bin)
        tv += std::abs(ca[bin] - cb[bin]);
      tv /= 2.0 * n;
    }
    out.series.push_back({times[ti], tv});
  }

  // Noise floor: the late-time plateau level.
  const std::size_t n = out.series.size();
  const std::size_t tail = std::max<std::size_t>(3, n / 5);
  std::vector<double> tail_tv;
  for (std::size_t i = n >= tail ? n - tail : 0; i < n; ++i)
    tail_tv.push_back(out.series[i].tv);
  std::sort(tail_tv.begin(), tail_tv.end());
  out.noise_floor = tail_tv.empty() ? 0.0 : tail_tv[tail_tv.size() / 2];

  // Exponential fit over the pre-floor window.
  std::vector<std::pair<double, double>> pts;
  for (const auto& s : out.series)
    if (s.tv > std::max(3.0 * out.noise_floor, 1e-12))
      pts.emplace_back(s.t, std::log(s.tv));
  if (pts.size() < 4) {
    pts.clear();
    for (const auto& s : out.series)
      if (s.tv > 0.0) pts.emplace_back(s.t, std::log(s.tv));
  }
  out.fit_points = static_cast<int>(pts.size());
  if (pts.size() >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (auto [x, y] : pts) { sx += x; sy += y; sxx += x * x; sxy += x * y; }
    const double m = static_cast<double>(pts.size());
    const double denom = m * sxx - sx * sx;
    if (std::abs(denom) > 0.0) {
      const double slope = (m * sxy - sx * sy) / denom;
      const double intercept = (sy - slope * sx) / m;
      out.rate = -slope;
      double ss_res = 0.0, ss_tot = 0.0;
      const double mean_y = sy / m;
      for (auto [x, y] : pts) {
        const double fit = intercept + slope * x;
        ss_res += (y - fit) * (y - fit);
        ss_tot += (y - mean_y) * (y - mean_y);
      }
      out.r_squared = (ss_tot > 0.0) ? 1.0 - ss_res / ss_tot : 1.0;
    }
  }
  return out;
}

namespace {

// q^e and derivatives, with 0^0 = 1.
inline double mono(double x, int e) {
  double v = 1.0;
  for (int i = 0; i < e; ++i) v *= x;
  return v;
}
inline double dmono(double x, int e) {
  return (e == 0) ? 0.0 : e * mono(x, e - 1);
}
inline double d2mono(double x, int e) {
  return (e < 2) ? 0.0 : static_cast<double>(e) * (e - 1) * mono(x, e - 2);
}

}  // namespace

double stationarity_residual(const GibbsModel& model, int battery_size,
                             double beta_scale) {
  const SystemParams& params = model.params();
  if (params.dof() != 1)
    throw ContractViolation("stationarity_residual: dof == 1 only");
  const Potential& pot = model.potential();
  const double beta = params.beta() * beta_scale;
  const double gamma = params.gamma();
  const double m = params.mass()[0];
  const double a = params.aux_a();
  const double kn_over_beta = 1.0 / params.beta();
  const double sigma = 2.0;

  // Box: the density and the Gaussian envelope are both negligible outside.
  double lq = 4.0;
  {
    Eigen::VectorXd q(1);
    for (; lq <= 4096.0; lq *= 1.5) {
      q << lq;
      if (pot.in_domain(q) && params.beta() * pot.value(q) > 45.0) break;
    }
  }
  const double lp = std::sqrt(2.0 * 45.0 * m / params.beta());
  const double lxi = std::sqrt(2.0 * 45.0 / (a * params.beta()));

  const int nodes = 72;
  const GaussRule& rule = gauss_legendre(nodes);
  struct Axis {
    std::vector<double> x, w;
  };
  const auto make_axis = [&](double half) {
    Axis ax;
    ax.x.resize(nodes);
    ax.w.resize(nodes);
    for (int i = 0; i < nodes; ++i) {
      ax.x[i] = half * rule.nodes[i];
      ax.w[i] = half * rule.weights[i];
    }
    return ax;
  };
  const Axis aq = make_axis(lq), ap = make_axis(lp), axi = make_axis(lxi);

  // Per-axis precomputation: density factors, potential and gradient.
  std::vector<double> dens_q(nodes), grad_q(nodes), env_q(nodes);
  std::vector<double> dens_p(nodes), env_p(nodes);
  std::vector<double> dens_xi(nodes), env_xi(nodes);
  for (int i = 0; i < nodes; ++i) {
    Eigen::VectorXd q(1);
    q << aq.x[i];
    const double u = pot.in_domain(q) ? pot.value(q) : kInf;
    dens_q[i] = std::isfinite(u) ? std::exp(-beta * u) : 0.0;
    grad_q[i] = std::isfinite(u) ? pot.gradient(q)[0] : 0.0;
    env_q[i] = std::exp(-aq.x[i] * aq.x[i] / (2.0 * sigma * sigma));
    dens_p[i] = std::exp(-beta * ap.x[i] * ap.x[i] / (2.0 * m));
    env_p[i] = std::exp(-ap.x[i] * ap.x[i] / (2.0 * sigma * sigma));
    dens_xi[i] = std::exp(-beta * a * axi.x[i] * axi.x[i] / 2.0);
    env_xi[i] = std::exp(-axi.x[i] * axi.x[i] / (2.0 * sigma * sigma));
  }

  static const int exps[10][3] = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1},
                                  {2, 0, 0}, {0, 2, 0}, {0, 0, 2}, {1, 1, 0},
                                  {0, 1, 1}, {1, 0, 1}};
  battery_size = std::clamp(battery_size, 1, 10);

  double worst = 0.0;
  for (int b = 0; b < battery_size; ++b) {
    const int eq = exps[b][0], ep = exps[b][1], exi = exps[b][2];
    double num = 0.0, den = 0.0;
    for (int i = 0; i < nodes; ++i) {
      const double q = aq.x[i];
      const double mq = mono(q, eq);
      for (int j = 0; j < nodes; ++j) {
        const double p = ap.x[j];
        const double mp = mono(p, ep), dp1 = dmono(p, ep), dp2 = d2mono(p, ep);
        const double wij = aq.w[i] * ap.w[j] * dens_q[i] * dens_p[j];
        const double env_ij = env_q[i] * env_p[j];
        for (int k = 0; k < nodes; ++k) {
          const double xi = axi.x[k];
          const double env = env_ij * env_xi[k];
          const double mxi = mono(xi, exi);
          // phi and its derivatives (envelope by product rule).
          const double phi_q = (dmono(q, eq) - mq * q / (sigma * sigma)) * mp * mxi * env;
          const double phi_p = (dp1 - mp * p / (sigma * sigma)) * mq * mxi * env;
          const double phi_pp =
              (dp2 - 2.0 * dp1 * p / (sigma * sigma) +
               mp * (p * p / (sigma * sigma * sigma * sigma) - 1.0 / (sigma * sigma))) *
              mq * mxi * env;
          const double phi_xi = (dmono(xi, exi) - mxi * xi / (sigma * sigma)) * mq * mp * env;
          const double lphi = p / m * phi_q -
                              (xi + gamma / m) * p * phi_p - grad_q[i] * phi_p +
                              (p * p / m - kn_over_beta) / a * phi_xi +
                              gamma / params.beta() * phi_pp;
          const double wt = wij * axi.w[k] * dens_xi[k];
          num += wt * lphi;
          den += wt;
        }
      }
    }
    worst = std::max(worst, std::abs(num / den));
  }
  return worst;
}

bool DiagnosticsReport::all_finite() const {
  const auto ok = [](double v) { return std::isfinite(v); };
  if (!ok(kinetic_temperature) || !ok(xi_mean) || !ok(xi_variance)) return false;
  if (ks_q && !ok(*ks_q)) return false;
  if (ks_p && !ok(*ks_p)) return false;
  if (ks_xi && !ok(*ks_xi)) return false;
  if (stationarity && !ok(*stationarity)) return false;
  for (const auto& [name, avg] : ergodic_averages)
    if (!ok(avg.value) || !ok(avg.std_error)) return false;
  if (tv) {
    for (const auto& pt : tv->series)
      if (!ok(pt.tv)) return false;
    if (!ok(tv->rate) || !ok(tv->r_squared)) return false;
  }
  return true;
}

std::string DiagnosticsReport::to_json() const {
  nlohmann::json j;
  j["kinetic_temperature"] = kinetic_temperature;
  j["xi_mean"] = xi_mean;
  j["xi_variance"] = xi_variance;
  j["samples_used"] = samples_used;
  j["burn_in_fraction"] = burn_in_fraction;
  if (ks_q) j["ks_q"] = *ks_q;
  if (ks_p) j["ks_p"] = *ks_p;
  if (ks_xi) j["ks_xi"] = *ks_xi;
  if (stationarity) j["stationarity_residual"] = *stationarity;
  if (!ergodic_averages.empty()) {
    nlohmann::json table = nlohmann::json::object();
    for (const auto& [name, avg] : ergodic_averages)
      table[name] = {{"value", avg.value},
                     {"std_error", avg.std_error},
                     {"n", avg.n}};
    j["ergodic_averages"] = table;
  }
  if (tv) {
    nlohmann::json series = nlohmann::json::array();
    for (const auto& pt : tv->series) series.push_back({pt.t, pt.tv});
    j["tv_decay"] = {{"series", series},
                     {"rate", tv->rate},
                     {"r_squared", tv->r_squared},
                     {"noise_floor", tv->noise_floor},
                     {"fit_points", tv->fit_points}};
  }
  j["all_finite"] = all_finite();
  return j.dump(2);
}

}  // namespace nhb
