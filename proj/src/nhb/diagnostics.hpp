#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nhb/dynamics.hpp"
#include "nhb/model.hpp"

namespace nhb {

/// The augmented Gibbs measure exp(-beta H)/Z.  The normalization splits
/// into analytic momentum/thermostat factors and a position integral,
/// which is computed by quadrature for dof <= 2 and unavailable above.
class GibbsModel {
 public:
  GibbsModel(PotentialHandle pot, SystemParams params);

  const Potential& potential() const { return *pot_; }
  const SystemParams& params() const { return params_; }
  double beta() const { return params_.beta(); }

  bool has_log_z() const { return log_z_.has_value(); }
  double log_z() const;

  /// -beta H(x) - log Z; -infinity outside the domain.
  double log_density(const State& x) const;

  /// CDF of the position marginal per coordinate (dof == 1 only).
  double q_marginal_cdf(double x) const;
  /// CDF of the momentum coordinate marginal: centered Gaussian with
  /// variance m_c kB T.
  double p_marginal_cdf(double x, int coord = 0) const;
  /// CDF of the thermostat marginal: centered Gaussian, variance kB T / a.
  double xi_marginal_cdf(double x) const;

  /// Gibbs expectation of a position observable by quadrature (dof == 1).
  double q_expectation(const std::function<double(double)>& f) const;

 private:
  PotentialHandle pot_;
  SystemParams params_;
  std::optional<double> log_z_;        // full log normalization
  std::optional<double> log_zq_;       // position factor
  double q_box_ = 0.0;                 // quadrature half-width
  std::vector<double> q_cdf_grid_;     // dof == 1: grid for the marginal CDF
  std::vector<double> q_cdf_values_;
};

/// Kolmogorov-Smirnov distance between an empirical sample and a reference
/// CDF.  Handles step references: the comparison uses both one-sided limits
/// at each sample point, so a sample against its own empirical CDF gives 0.
double ks_distance(std::vector<double> samples,
                   const std::function<double(double)>& cdf);

/// (2/(k N)) * average kinetic energy over the stored states.
double temperature_estimate(const Trajectory& traj, const SystemParams& params);

struct ErgodicAverage {
  double value = 0.0;
  double std_error = 0.0;
  long n = 0;
};

/// Trapezoid time-average of f along the trajectory with a batch-means
/// standard error.
ErgodicAverage ergodic_average(const std::function<double(const State&)>& f,
                               const Trajectory& traj);

struct TvPoint {
  double t;
  double tv;
};

struct TvDecay {
  std::vector<TvPoint> series;
  double rate = 0.0;      // eta in log TV ~ c - eta t
  double r_squared = 0.0;
  double noise_floor = 0.0;
  int fit_points = 0;
};

/// Histogram total-variation distance between two ensembles of (q, p)
/// snapshots at common times, with Freedman-Diaconis binning on the first
/// position and momentum coordinates, plus an exponential fit over the
/// pre-noise-floor window.
TvDecay tv_decay(const std::vector<std::vector<State>>& ensemble_a,
                 const std::vector<std::vector<State>>& ensemble_b,
                 const std::vector<double>& times);

/// Max over a battery of Gaussian-times-polynomial test functions of the
/// normalized weak-form residual |int exp(-beta' H) L phi| / int exp(-beta' H)
/// over a truncated box (dof == 1 only).  beta_scale multiplies the density
/// exponent: 1 probes the invariant density, other values should produce a
/// large residual.
double stationarity_residual(const GibbsModel& model, int battery_size = 10,
                             double beta_scale = 1.0);

struct DiagnosticsReport {
  double kinetic_temperature = 0.0;
  double xi_mean = 0.0;
  double xi_variance = 0.0;
  std::optional<double> ks_q;
  std::optional<double> ks_p;
  std::optional<double> ks_xi;
  std::optional<TvDecay> tv;
  std::vector<std::pair<std::string, ErgodicAverage>> ergodic_averages;
  std::optional<double> stationarity;
  long samples_used = 0;
  double burn_in_fraction = 0.0;

  bool all_finite() const;
  std::string to_json() const;
};

}  // namespace nhb
