#include "nhb/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "nhb/numerics.hpp"

namespace nhb {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

SystemParams::SystemParams(int n_particles, int k_dim, Eigen::VectorXd mass,
                           double gamma, double k_boltzmann,
                           double temperature, double aux_a)
    : n_particles_(n_particles),
      k_dim_(k_dim),
      mass_(std::move(mass)),
      gamma_(gamma),
      kB_(k_boltzmann),
      T_(temperature),
      a_(aux_a) {
  if (n_particles_ < 1) throw ConfigError("system: particle count must be >= 1");
  if (k_dim_ < 1) throw ConfigError("system: spatial dimension must be >= 1");
  if (mass_.size() != n_particles_)
    throw ConfigError("system: mass vector length must equal particle count");
  for (int i = 0; i < mass_.size(); ++i)
    if (!(mass_[i] > 0.0)) throw ConfigError("system: masses must be positive");
  if (!(gamma_ > 0.0)) throw ConfigError("system: gamma must be positive");
  if (!(kB_ > 0.0)) throw ConfigError("system: kB must be positive");
  if (!(T_ > 0.0)) throw ConfigError("system: T must be positive");
  if (!(a_ > 0.0)) throw ConfigError("system: a must be positive");
  beta_ = 1.0 / (kB_ * T_);
}

double SystemParams::friction_mass_sum() const {
  double s = 0.0;
  for (int i = 0; i < mass_.size(); ++i) s += 1.0 / mass_[i];
  return gamma_ * k_dim_ * s;
}

bool State::finite() const {
  return q.allFinite() && p.allFinite() && std::isfinite(xi);
}

double kinetic_norm_sq(const Eigen::VectorXd& p, const SystemParams& params) {
  if (p.size() != params.dof())
    throw ContractViolation("kinetic_norm_sq: momentum dimension mismatch");
  double s = 0.0;
  for (int c = 0; c < p.size(); ++c) s += p[c] * p[c] / params.mass_of_coord(c);
  return s;
}

double config_norm(const Eigen::VectorXd& v, const SystemParams& params) {
  if (v.size() != params.dof())
    throw ContractViolation("config_norm: dimension mismatch");
  double s = 0.0;
  for (int c = 0; c < v.size(); ++c) s += params.mass_of_coord(c) * v[c] * v[c];
  return std::sqrt(s);
}

double kinetic_energy(const Eigen::VectorXd& p, const SystemParams& params) {
  return 0.5 * kinetic_norm_sq(p, params);
}

Potential::Potential(int dof, double zeta) : dof_(dof), zeta_(zeta) {
  if (dof_ < 1) throw ConfigError("potential: dof must be >= 1");
  if (!(zeta_ > 1.0 && zeta_ < 2.0))
    throw ConfigError("potential: zeta must lie in (1, 2)");
}

void Potential::check_dof(const Eigen::VectorXd& q) const {
  if (q.size() != dof_)
    throw ContractViolation("potential: position dimension mismatch");
}

namespace {

class HarmonicPotential final : public Potential {
 public:
  HarmonicPotential(int dof, double c, double zeta)
      : Potential(dof, zeta), c_(c) {
    if (!(c_ > 0.0)) throw ConfigError("harmonic: coefficient must be positive");
  }
  double value(const Eigen::VectorXd& q) const override {
    check_dof(q);
    return c_ * q.squaredNorm();
  }
  Eigen::VectorXd gradient(const Eigen::VectorXd& q) const override {
    check_dof(q);
    return 2.0 * c_ * q;
  }
  Eigen::MatrixXd hessian(const Eigen::VectorXd& q) const override {
    check_dof(q);
    return 2.0 * c_ * Eigen::MatrixXd::Identity(dof(), dof());
  }
  bool in_domain(const Eigen::VectorXd& q) const override {
    check_dof(q);
    return q.allFinite();
  }
  bool convex_domain() const override { return true; }
  std::string describe() const override {
    std::ostringstream os;
    os << "harmonic(c=" << c_ << ")";
    return os.str();
  }

 private:
  double c_;
};

// Sum over coordinates of a univariate polynomial, P given by coefficients
// in increasing-degree order.
class CoordinatePolynomial final : public Potential {
 public:
  CoordinatePolynomial(int dof, std::vector<double> coeffs, double zeta,
                       std::string label)
      : Potential(dof, zeta), c_(std::move(coeffs)), label_(std::move(label)) {
    if (c_.size() < 3) throw ConfigError(label_ + ": polynomial degree must be >= 2");
    const int deg = static_cast<int>(c_.size()) - 1;
    if (deg % 2 != 0) throw ConfigError(label_ + ": polynomial degree must be even");
    if (!(c_.back() > 0.0))
      throw ConfigError(label_ + ": leading coefficient must be positive");
    validate_nonnegative();
  }

  double value(const Eigen::VectorXd& q) const override {
    check_dof(q);
    double u = 0.0;
    for (int j = 0; j < q.size(); ++j) u += poly(q[j]);
    return u;
  }
  Eigen::VectorXd gradient(const Eigen::VectorXd& q) const override {
    check_dof(q);
    Eigen::VectorXd g(q.size());
    for (int j = 0; j < q.size(); ++j) g[j] = dpoly(q[j]);
    return g;
  }
  Eigen::MatrixXd hessian(const Eigen::VectorXd& q) const override {
    check_dof(q);
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dof(), dof());
    for (int j = 0; j < q.size(); ++j) h(j, j) = d2poly(q[j]);
    return h;
  }
  bool in_domain(const Eigen::VectorXd& q) const override {
    check_dof(q);
    return q.allFinite();
  }
  bool convex_domain() const override { return true; }
  std::string describe() const override { return label_; }

 private:
  double poly(double x) const {
    double v = 0.0;
    for (int j = static_cast<int>(c_.size()) - 1; j >= 0; --j) v = v * x + c_[j];
    return v;
  }
  double dpoly(double x) const {
    double v = 0.0;
    for (int j = static_cast<int>(c_.size()) - 1; j >= 1; --j)
      v = v * x + j * c_[j];
    return v;
  }
  double d2poly(double x) const {
    double v = 0.0;
    for (int j = static_cast<int>(c_.size()) - 1; j >= 2; --j)
      v = v * x + static_cast<double>(j) * (j - 1) * c_[j];
    return v;
  }

  // min P over the real line must be >= 0.  The minimum lies in
  // [-M, M] with M = 1 + max_j |c_j / c_deg| (Cauchy bound on P' roots).
  void validate_nonnegative() {
    const int deg = static_cast<int>(c_.size()) - 1;
    double m = 0.0;
    for (int j = 0; j < deg; ++j) m = std::max(m, std::abs(c_[j] / c_[deg]));
    const double bound = 1.0 + m;
    double best = kInf;
    double best_x = 0.0;
    const int n = 4096;
    for (int i = 0; i <= n; ++i) {
      const double x = -bound + 2.0 * bound * i / n;
      const double v = poly(x);
      if (v < best) {
        best = v;
        best_x = x;
      }
    }
    // Polish the grid minimum.
    const double h = 2.0 * bound / n;
    const auto res = brent_minimize([this](double x) { return poly(x); },
                                    best_x - h, best_x + h, 1e-12);
    best = std::min(best, res.value);
    if (best < -1e-12)
      throw ConfigError(label_ + ": polynomial takes negative values (min " +
                        std::to_string(best) + "); shift it upward");
  }

  std::vector<double> c_;
  std::string label_;
};

class LennardJonesPotential final : public Potential {
 public:
  LennardJonesPotential(int n_particles, int k_dim, double strength, double r0,
                        double confine, double zeta)
      : Potential(n_particles * k_dim, zeta),
        n_(n_particles),
        k_(k_dim),
        strength_(strength),
        r0_(r0),
        confine_(confine) {
    if (n_ < 2) throw ConfigError("lennard_jones: needs at least two particles");
    if (!(strength_ > 0.0)) throw ConfigError("lennard_jones: strength must be positive");
    if (!(r0_ > 0.0)) throw ConfigError("lennard_jones: r0 must be positive");
    if (!(confine_ > 0.0)) throw ConfigError("lennard_jones: confinement must be positive");
  }

  double value(const Eigen::VectorXd& q) const override {
    check_dof(q);
    if (!in_domain(q)) return kInf;
    double u = confine_ * q.squaredNorm();
    for (int i = 0; i < n_; ++i)
      for (int j = i + 1; j < n_; ++j) {
        const double r = pair_dist(q, i, j);
        const double s6 = std::pow(r0_ / r, 6);
        u += strength_ * (s6 * s6 - 2.0 * s6 + 1.0);
      }
    return u;
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd& q) const override {
    check_dof(q);
    if (!in_domain(q)) throw DomainError("lennard_jones: gradient outside domain");
    Eigen::VectorXd g = 2.0 * confine_ * q;
    for (int i = 0; i < n_; ++i)
      for (int j = i + 1; j < n_; ++j) {
        const double r = pair_dist(q, i, j);
        const double s6 = std::pow(r0_ / r, 6);
        // d/dr of strength*(s12 - 2 s6 + 1) = strength*(-12 s12 + 12 s6)/r
        const double dudr = strength_ * 12.0 * (s6 - s6 * s6) / r;
        for (int c = 0; c < k_; ++c) {
          const double d = (q[i * k_ + c] - q[j * k_ + c]) / r;
          g[i * k_ + c] += dudr * d;
          g[j * k_ + c] -= dudr * d;
        }
      }
    return g;
  }

  Eigen::MatrixXd hessian(const Eigen::VectorXd& q) const override {
    check_dof(q);
    if (!in_domain(q)) throw DomainError("lennard_jones: hessian outside domain");
    Eigen::MatrixXd h =
        2.0 * confine_ * Eigen::MatrixXd::Identity(dof(), dof());
    for (int i = 0; i < n_; ++i)
      for (int j = i + 1; j < n_; ++j) {
        const double r = pair_dist(q, i, j);
        const double s6 = std::pow(r0_ / r, 6);
        const double du = strength_ * 12.0 * (s6 - s6 * s6) / r;
        const double d2u =
            strength_ * 12.0 * (13.0 * s6 * s6 - 7.0 * s6) / (r * r);
        for (int c = 0; c < k_; ++c)
          for (int d = 0; d < k_; ++d) {
            const double ec = (q[i * k_ + c] - q[j * k_ + c]) / r;
            const double ed = (q[i * k_ + d] - q[j * k_ + d]) / r;
            const double block =
                d2u * ec * ed + du * (((c == d) ? 1.0 : 0.0) - ec * ed) / r;
            h(i * k_ + c, i * k_ + d) += block;
            h(j * k_ + c, j * k_ + d) += block;
            h(i * k_ + c, j * k_ + d) -= block;
            h(j * k_ + c, i * k_ + d) -= block;
          }
      }
    return h;
  }

  bool in_domain(const Eigen::VectorXd& q) const override {
    check_dof(q);
    if (!q.allFinite()) return false;
    for (int i = 0; i < n_; ++i)
      for (int j = i + 1; j < n_; ++j)
        if (!(pair_dist(q, i, j) > 0.0)) return false;
    return true;
  }
  bool convex_domain() const override { return false; }
  std::string describe() const override {
    std::ostringstream os;
    os << "lennard_jones(strength=" << strength_ << ", r0=" << r0_
       << ", confine=" << confine_ << ")";
    return os.str();
  }

 private:
  double pair_dist(const Eigen::VectorXd& q, int i, int j) const {
    double s = 0.0;
    for (int c = 0; c < k_; ++c) {
      const double d = q[i * k_ + c] - q[j * k_ + c];
      s += d * d;
    }
    return std::sqrt(s);
  }

  int n_, k_;
  double strength_, r0_, confine_;
};

}  // namespace

PotentialHandle make_harmonic(int dof, double c, double zeta) {
  return std::make_shared<HarmonicPotential>(dof, c, zeta);
}

PotentialHandle make_double_well(int dof, double c1, double c2, double c3,
                                 double zeta) {
  if (!(c1 > 0.0)) throw ConfigError("double_well: quartic coefficient must be positive");
  std::ostringstream os;
  os << "double_well(c1=" << c1 << ", c2=" << c2 << ", c3=" << c3 << ")";
  struct DoubleWell final : Potential {
    DoubleWell(int dof, double c1, double c2, double c3, double zeta,
               std::string label)
        : Potential(dof, zeta), c1_(c1), c2_(c2), c3_(c3),
          label_(std::move(label)) {
      // min over q of sum_j (c1 q_j^4 - c2 q_j^2) + c3
      const double per = (c2_ > 0.0) ? -c2_ * c2_ / (4.0 * c1_) : 0.0;
      if (this->dof() * per + c3_ < -1e-12)
        throw ConfigError(label_ + ": c3 too small, U dips below zero");
    }
    double value(const Eigen::VectorXd& q) const override {
      check_dof(q);
      double u = c3_;
      for (int j = 0; j < q.size(); ++j) {
        const double x2 = q[j] * q[j];
        u += c1_ * x2 * x2 - c2_ * x2;
      }
      return u;
    }
    Eigen::VectorXd gradient(const Eigen::VectorXd& q) const override {
      check_dof(q);
      Eigen::VectorXd g(q.size());
      for (int j = 0; j < q.size(); ++j)
        g[j] = 4.0 * c1_ * q[j] * q[j] * q[j] - 2.0 * c2_ * q[j];
      return g;
    }
    Eigen::MatrixXd hessian(const Eigen::VectorXd& q) const override {
      check_dof(q);
      Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dof(), dof());
      for (int j = 0; j < q.size(); ++j)
        h(j, j) = 12.0 * c1_ * q[j] * q[j] - 2.0 * c2_;
      return h;
    }
    bool in_domain(const Eigen::VectorXd& q) const override {
      check_dof(q);
      return q.allFinite();
    }
    bool convex_domain() const override { return true; }
    std::string describe() const override { return label_; }
    double c1_, c2_, c3_;
    std::string label_;
  };
  return std::make_shared<DoubleWell>(dof, c1, c2, c3, zeta, os.str());
}

PotentialHandle make_polynomial(int dof, std::vector<double> coeffs,
                                double zeta) {
  return std::make_shared<CoordinatePolynomial>(dof, std::move(coeffs), zeta,
                                                "polynomial");
}

PotentialHandle make_lennard_jones(int n_particles, int k_dim, double strength,
                                   double r0, double confine, double zeta) {
  return std::make_shared<LennardJonesPotential>(n_particles, k_dim, strength,
                                                 r0, confine, zeta);
}

double hamiltonian(const State& x, const Potential& pot,
                   const SystemParams& params) {
  if (!pot.in_domain(x.q))
    throw DomainError("hamiltonian: position outside the potential domain");
  const double u = pot.value(x.q);
  if (!std::isfinite(u))
    throw DomainError("hamiltonian: potential is infinite at this position");
  return kinetic_energy(x.p, params) + u +
         0.5 * params.aux_a() * x.xi * x.xi;
}

NormalityReport normality_spotcheck(
    const Potential& pot, const std::vector<Eigen::VectorXd>& probe) {
  NormalityReport report;
  for (const auto& q : probe) {
    if (!pot.in_domain(q)) continue;
    NormalityProbe row;
    row.u = pot.value(q);
    row.grad_norm = pot.gradient(q).norm();
    const Eigen::MatrixXd h = pot.hessian(q);
    const double hess_norm =
        h.selfadjointView<Eigen::Lower>().eigenvalues().cwiseAbs().maxCoeff();
    row.ratio = (row.grad_norm > 0.0)
                    ? hess_norm / std::pow(row.grad_norm, pot.zeta())
                    : std::numeric_limits<double>::infinity();
    report.probes.push_back(row);
  }
  std::sort(report.probes.begin(), report.probes.end(),
            [](const NormalityProbe& a, const NormalityProbe& b) {
              return a.u < b.u;
            });
  if (report.probes.size() < 4) return report;

  // Examine the last decade of U values.
  const double u_max = report.probes.back().u;
  std::vector<const NormalityProbe*> tail;
  for (const auto& row : report.probes)
    if (row.u >= 0.1 * u_max) tail.push_back(&row);
  if (tail.size() < 3) {
    tail.clear();
    const std::size_t keep = std::min<std::size_t>(report.probes.size(), 6);
    for (std::size_t i = report.probes.size() - keep; i < report.probes.size();
         ++i)
      tail.push_back(&report.probes[i]);
  }
  report.grad_increasing = true;
  report.ratio_decreasing = true;
  for (std::size_t i = 1; i < tail.size(); ++i) {
    if (tail[i]->grad_norm < tail[i - 1]->grad_norm * 0.999)
      report.grad_increasing = false;
    if (tail[i]->ratio > tail[i - 1]->ratio * 1.001)
      report.ratio_decreasing = false;
  }
  const bool ratio_shrinks = tail.back()->ratio < 0.5 * tail.front()->ratio ||
                             tail.back()->ratio < 1e-6;
  report.pass =
      report.grad_increasing && report.ratio_decreasing && ratio_shrinks;
  return report;
}

std::vector<Eigen::VectorXd> default_normality_probe(const Potential& pot,
                                                     int n_points) {
  std::vector<Eigen::VectorXd> probe;
  const int d = pot.dof();
  Eigen::VectorXd dir = Eigen::VectorXd::Ones(d).normalized();
  // Outward ray: covers the confining tail of every built-in.
  for (int j = 0; j < n_points; ++j) {
    const double s = 2.0 * std::pow(1.6, j);
    const Eigen::VectorXd q = s * dir;
    if (pot.in_domain(q)) probe.push_back(q);
  }
  if (!pot.convex_domain() && d >= 2) {
    // Toward the singular set: shrink the gap between the first two
    // particles while keeping the rest fixed.
    Eigen::VectorXd base = Eigen::VectorXd::Zero(d);
    for (int i = 0; i < d; ++i) base[i] = 1.5 * (i + 1);
    for (int j = 0; j < n_points; ++j) {
      Eigen::VectorXd q = base;
      const double gap = std::pow(0.5, j + 1);
      q[0] = base[1] - gap * (base[1] - base[0]);
      if (pot.in_domain(q)) probe.push_back(q);
    }
  }
  return probe;
}

std::optional<double> check_integrability(const Potential& pot, double beta) {
  if (pot.dof() > 2) return std::nullopt;
  const auto f1 = [&](double x) {
    Eigen::VectorXd q(1);
    q << x;
    if (!pot.in_domain(q)) return 0.0;
    const double u = pot.value(q);
    return std::isfinite(u) ? std::exp(-beta * u) : 0.0;
  };
  double prev = 0.0;
  if (pot.dof() == 1) {
    for (double box = 4.0; box <= 4096.0; box *= 2.0) {
      const double val = adaptive_simpson(f1, -box, box, 1e-10);
      if (box > 8.0 && std::abs(val - prev) <= 1e-9 * std::max(1.0, val))
        return std::log(val);
      prev = val;
    }
    throw ConfigError("potential: exp(-beta U) failed the integrability check");
  }
  // dof == 2: iterated quadrature, lower accuracy is fine for a sanity gate.
  const auto f2 = [&](double x, double y) {
    Eigen::VectorXd q(2);
    q << x, y;
    if (!pot.in_domain(q)) return 0.0;
    const double u = pot.value(q);
    return std::isfinite(u) ? std::exp(-beta * u) : 0.0;
  };
  for (double box = 4.0; box <= 512.0; box *= 2.0) {
    const auto inner = [&](double x) {
      return gauss_panel_integrate([&](double y) { return f2(x, y); }, -box,
                                   box, 40, 32);
    };
    const double val = gauss_panel_integrate(inner, -box, box, 40, 32);
    // Sanity gate only: singular pair walls limit the box-to-box agreement.
    if (box > 8.0 && std::abs(val - prev) <= 1e-4 * std::max(1.0, val))
      return std::log(val);
    prev = val;
  }
  throw ConfigError("potential: exp(-beta U) failed the integrability check");
}

}  // namespace nhb
