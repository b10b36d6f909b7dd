#pragma once

// Effort and running-cost models, the homogeneous integrand built from the
// effort function, and cost evaluation of boundaries and trajectories.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "movset/error.hpp"
#include "movset/geometry.hpp"
#include "movset/trajectory.hpp"

namespace movset {

// E(beta): cost per unit boundary length of pushing the boundary inward at
// speed beta. Zero for beta <= beta0 < 0, convex and nondecreasing above.
class EffortModel {
 public:
  enum class Kind { canonical, hyperbolic, custom };
  using Fn = std::function<double(double)>;

  // E(beta) = max(0, 1 + beta), beta0 = -1.
  static EffortModel canonical() {
    EffortModel m;
    m.kind_ = Kind::canonical;
    m.beta0_ = -1.0;
    m.name_ = "canonical";
    return m;
  }

  // E(beta) = sqrt(eps^2 + (1+beta)^2) - eps above beta0 = -1. Satisfies the
  // strict tangent-intercept inequality for 0 < eps < 1.
  static EffortModel hyperbolic(double eps) {
    if (!(eps > 0.0 && eps < 1.0)) throw DomainError("hyperbolic effort model needs 0 < eps < 1");
    EffortModel m;
    m.kind_ = Kind::hyperbolic;
    m.beta0_ = -1.0;
    m.eps_ = eps;
    m.name_ = "hyperbolic";
    return m;
  }

  // User-supplied branch on (beta0, inf); the zero branch below beta0 is
  // enforced here. Not validated: see effort_model_checks / checked_custom.
  static EffortModel custom(double beta0, Fn value, Fn derivative, Fn second_derivative, std::string name = "custom") {
    if (!(beta0 < 0.0)) throw DomainError("effort model needs beta0 < 0");
    EffortModel m;
    m.kind_ = Kind::custom;
    m.beta0_ = beta0;
    m.value_ = std::move(value);
    m.derivative_ = std::move(derivative);
    m.second_ = std::move(second_derivative);
    m.name_ = std::move(name);
    return m;
  }

  // Piecewise-linear E through (beta, E) knots, first knot (beta0, 0),
  // extended linearly past the last knot.
  static EffortModel from_table(std::vector<std::pair<double, double>> knots);

  // custom() that throws DomainError unless effort_model_checks passes.
  static EffortModel checked_custom(double beta0, Fn value, Fn derivative, Fn second_derivative,
                                    std::string name = "custom");

  Kind kind() const { return kind_; }
  const std::string& name() const { return name_; }
  double beta0() const { return beta0_; }
  double epsilon() const { return eps_; }

  double value(double beta) const {
    if (beta <= beta0_) return 0.0;
    switch (kind_) {
      case Kind::canonical:
        return 1.0 + beta;
      case Kind::hyperbolic: {
        const double u = 1.0 + beta;
        return std::sqrt(eps_ * eps_ + u * u) - eps_;
      }
      case Kind::custom:
        return value_(beta);
    }
    return 0.0;
  }

  // Right derivative at the kink beta0; zero below it.
  double derivative(double beta) const {
    if (beta < beta0_) return 0.0;
    switch (kind_) {
      case Kind::canonical:
        return 1.0;
      case Kind::hyperbolic: {
        const double u = 1.0 + beta;
        return u / std::sqrt(eps_ * eps_ + u * u);
      }
      case Kind::custom:
        return derivative_(beta);
    }
    return 0.0;
  }

  double second_derivative(double beta) const {
    if (beta < beta0_) return 0.0;
    switch (kind_) {
      case Kind::canonical:
        return 0.0;
      case Kind::hyperbolic: {
        const double u = 1.0 + beta;
        const double r = eps_ * eps_ + u * u;
        return eps_ * eps_ / (r * std::sqrt(r));
      }
      case Kind::custom:
        return second_(beta);
    }
    return 0.0;
  }

  // lim E'(beta) as beta -> inf.
  double recession_slope() const {
    switch (kind_) {
      case Kind::canonical:
      case Kind::hyperbolic:
        return 1.0;
      case Kind::custom:
        return derivative_(1e8);
    }
    return 1.0;
  }

  // lim E(beta) - recession_slope() * beta as beta -> inf (intercept of the
  // asymptote).
  double asymptote_intercept() const {
    switch (kind_) {
      case Kind::canonical:
        return 1.0;
      case Kind::hyperbolic:
        return 1.0 - eps_;
      case Kind::custom:
        return value_(1e8) - derivative_(1e8) * 1e8;
    }
    return 0.0;
  }

  // Smallest beta >= beta0 with E(beta) = e, on the increasing branch.
  double inverse(double e) const {
    if (!(e >= 0.0) || !std::isfinite(e)) throw DomainError("effort inverse: level must be finite and >= 0");
    if (e == 0.0) return beta0_;
    switch (kind_) {
      case Kind::canonical:
        return e - 1.0;
      case Kind::hyperbolic:
        return -1.0 + std::sqrt((e + eps_) * (e + eps_) - eps_ * eps_);
      case Kind::custom:
        break;
    }
    double lo = beta0_, hi = beta0_ + 1.0;
    while (value(hi) < e) {
      lo = hi;
      hi = beta0_ + 2.0 * (hi - beta0_);
      if (hi - beta0_ > 1e12) throw DomainError("effort inverse: level outside the range of E");
    }
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid == lo || mid == hi) break;
      (value(mid) < e ? lo : hi) = mid;
    }
    return hi;
  }

 private:
  EffortModel() = default;

  Kind kind_ = Kind::canonical;
  double beta0_ = -1.0;
  double eps_ = 0.0;
  Fn value_, derivative_, second_;
  std::string name_;
};

// ---------------------------------------------------------------------------
// Model diagnostics

struct ModelCheck {
  std::string name;
  bool pass = true;
  double worst_margin = std::numeric_limits<double>::infinity();
  double worst_at = 0.0;  // beta where the worst margin occurred

  void record(double margin, double at, bool strict) {
    if (margin < worst_margin) {
      worst_margin = margin;
      worst_at = at;
    }
    if (strict ? !(margin > 0.0) : (margin < 0.0)) pass = false;
  }
};

struct EffortModelReport {
  ModelCheck sublinearity{"sublinearity E(b) <= b E(1), b >= 1"};
  ModelCheck tangent_intercept{"tangent intercept E(b) - b E'(b) >= 0, b > 0"};
  ModelCheck strict_scaling{"strict scaling E(l b) < l E(b), b > beta0, 1 < l <= 10"};
  ModelCheck convexity{"midpoint convexity"};

  bool all_pass() const { return sublinearity.pass && tangent_intercept.pass && strict_scaling.pass && convexity.pass; }
};

namespace detail {

// Strict-scaling margins lambda*E(b) - E(lambda*b) over a deterministic grid.
inline ModelCheck strict_scaling_grid(const EffortModel& m, std::size_t samples, double beta_span = 20.0) {
  ModelCheck c{"strict scaling E(l b) < l E(b), b > beta0, 1 < l <= 10"};
  const double b0 = m.beta0();
  const std::size_t nl = 12;
  for (std::size_t i = 1; i <= samples; ++i) {
    const double b = b0 + beta_span * static_cast<double>(i) / static_cast<double>(samples);
    for (std::size_t k = 1; k <= nl; ++k) {
      const double lam = 1.0 + 9.0 * static_cast<double>(k) / static_cast<double>(nl);
      c.record(lam * m.value(b) - m.value(lam * b), b, true);
    }
  }
  return c;
}

}  // namespace detail

// Sampled checks of the structural assumptions on E. Failures are report
// entries, never exceptions.
inline EffortModelReport effort_model_checks(const EffortModel& m, std::size_t samples = 400) {
  if (samples < 100) throw DomainError("effort_model_checks: need at least 100 samples");
  EffortModelReport r;
  const double s = static_cast<double>(samples);
  const double e1 = m.value(1.0);
  for (std::size_t i = 0; i < samples; ++i) {
    const double b = 1.0 + 50.0 * static_cast<double>(i) / s;
    r.sublinearity.record(b * e1 - m.value(b) + 1e-12 * (1.0 + b * e1), b, false);
  }
  for (std::size_t i = 1; i <= samples; ++i) {
    const double b = 50.0 * static_cast<double>(i) / s;
    const double e = m.value(b);
    r.tangent_intercept.record(e - b * m.derivative(b) + 1e-12 * (1.0 + e), b, false);
  }
  r.strict_scaling = detail::strict_scaling_grid(m, samples);
  const double lo = m.beta0() - 1.0, hi = 50.0;
  for (std::size_t i = 0; i < samples; ++i) {
    for (std::size_t j = i + 1; j < samples; j += 7) {
      const double a = lo + (hi - lo) * static_cast<double>(i) / s;
      const double b = lo + (hi - lo) * static_cast<double>(j) / s;
      const double ea = m.value(a), eb = m.value(b);
      const double margin = 0.5 * (ea + eb) - m.value(0.5 * (a + b)) + 1e-12 * (1.0 + ea + eb);
      r.convexity.record(margin, 0.5 * (a + b), false);
    }
  }
  return r;
}

inline EffortModel EffortModel::checked_custom(double beta0, Fn value, Fn derivative, Fn second_derivative,
                                               std::string name) {
  auto m = custom(beta0, std::move(value), std::move(derivative), std::move(second_derivative), std::move(name));
  const auto report = effort_model_checks(m);
  if (!report.all_pass()) throw DomainError("custom effort model '" + m.name() + "' fails the structural checks");
  return m;
}

inline EffortModel EffortModel::from_table(std::vector<std::pair<double, double>> knots) {
  if (knots.size() < 2) throw DomainError("effort table needs at least two knots");
  std::sort(knots.begin(), knots.end());
  if (knots.front().second != 0.0) throw DomainError("effort table: first knot must have E = 0 (it defines beta0)");
  for (std::size_t i = 1; i < knots.size(); ++i)
    if (!(knots[i].first > knots[i - 1].first)) throw DomainError("effort table: duplicate beta knot");
  const double beta0 = knots.front().first;
  auto shared = std::make_shared<std::vector<std::pair<double, double>>>(std::move(knots));
  auto slope_at = [shared](double b) {
    const auto& k = *shared;
    std::size_t i = 0;
    while (i + 2 < k.size() && b >= k[i + 1].first) ++i;
    return (k[i + 1].second - k[i].second) / (k[i + 1].first - k[i].first);
  };
  auto value = [shared, slope_at](double b) {
    const auto& k = *shared;
    std::size_t i = 0;
    while (i + 2 < k.size() && b >= k[i + 1].first) ++i;
    return k[i].second + slope_at(b) * (b - k[i].first);
  };
  return checked_custom(beta0, value, slope_at, [](double) { return 0.0; }, "table");
}

// L(v) = |(v1,v2)| E(-v0 / |(v1,v2)|), positively homogeneous of degree one.
inline double homogeneous_integrand(const EffortModel& m, std::array<double, 3> v) {
  const double s = std::hypot(v[1], v[2]);
  if (s == 0.0) throw DomainError("homogeneous_integrand: (v1, v2) = (0, 0)");
  return s * m.value(-v[0] / s);
}

struct HessianSpectrum {
  std::array<double, 3> closed_form{};  // ascending
  std::array<double, 3> numerical{};    // ascending
  double max_discrepancy = 0.0;
  double min_eigenvalue = 0.0;
};

// Eigenvalues of D^2 L at v = (v0, 1, 0): closed form against a central
// difference Hessian, Richardson-extrapolated over steps h, h/2, h/4, h/8. The
// step shrinks with the distance to the kink so the stencil stays smooth.
inline HessianSpectrum hessian_spectrum(const EffortModel& m, double v0) {
  const double beta = -v0;
  const double gap = (beta - m.beta0()) / (1.0 + std::abs(beta));
  if (!(gap > 1e-6)) throw DomainError("hessian_spectrum: v0 on or too close to the kink -v0 = beta0");
  const double h = std::min(1e-2, 0.1 * gap) * std::max(1.0, std::hypot(v0, 1.0));
  HessianSpectrum out;
  const double e = m.value(beta), de = m.derivative(beta), d2e = m.second_derivative(beta);
  out.closed_form = {0.0, (1.0 + v0 * v0) * d2e, v0 * de + e};
  std::sort(out.closed_form.begin(), out.closed_form.end());

  const std::array<double, 3> base{v0, 1.0, 0.0};
  auto central = [&](double step) {
    auto L = [&](int i, double di, int j, double dj) {
      auto v = base;
      v[i] += di;
      v[j] += dj;
      return homogeneous_integrand(m, v);
    };
    Eigen::Matrix3d D;
    const double f0 = homogeneous_integrand(m, base);
    for (int i = 0; i < 3; ++i) {
      D(i, i) = (L(i, step, i, 0.0) - 2.0 * f0 + L(i, -step, i, 0.0)) / (step * step);
      for (int j = i + 1; j < 3; ++j) {
        D(i, j) = D(j, i) =
            (L(i, step, j, step) - L(i, step, j, -step) - L(i, -step, j, step) + L(i, -step, j, -step)) / (4.0 * step * step);
      }
    }
    return D;
  };
  // Neville tableau for an even error expansion in the step.
  std::array<Eigen::Matrix3d, 4> T;
  for (std::size_t k = 0; k < 4; ++k) T[k] = central(h / static_cast<double>(1 << k));
  for (std::size_t level = 1; level < 4; ++level) {
    const double f = std::pow(4.0, static_cast<double>(level));
    for (std::size_t k = 3; k >= level; --k) T[k] = (f * T[k] - T[k - 1]) / (f - 1.0);
  }
  const Eigen::Matrix3d H = T[3];
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(H, Eigen::EigenvaluesOnly);
  for (int i = 0; i < 3; ++i) out.numerical[static_cast<std::size_t>(i)] = solver.eigenvalues()(i);
  std::sort(out.numerical.begin(), out.numerical.end());
  for (std::size_t i = 0; i < 3; ++i)
    out.max_discrepancy = std::max(out.max_discrepancy, std::abs(out.numerical[i] - out.closed_form[i]));
  out.min_eigenvalue = out.closed_form[0];
  return out;
}

// Trapezoidal quadrature of E(beta) ds over the closed curve.
inline double boundary_effort(const ClosedCurve& curve, std::span<const double> beta, const EffortModel& m) {
  if (beta.size() != curve.size()) throw DomainError("boundary_effort: field length does not match vertex count");
  const auto w = vertex_weights(curve);
  double total = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) total += m.value(beta[i]) * w[i];
  return total;
}

// ---------------------------------------------------------------------------
// Running cost phi(effort)

class RunningCostModel {
 public:
  enum class Kind { power, cap };

  // phi(s) = C s^p, p > 1.
  static RunningCostModel power(double c, double p) {
    if (!(c > 0.0) || !(p > 1.0)) throw DomainError("power running cost needs C > 0 and p > 1");
    RunningCostModel r;
    r.kind_ = Kind::power;
    r.c_ = c;
    r.p_ = p;
    return r;
  }

  // phi(s) = 0 for s <= M, +inf above.
  static RunningCostModel cap(double m) {
    if (!(m > 0.0)) throw DomainError("cap running cost needs M > 0");
    RunningCostModel r;
    r.kind_ = Kind::cap;
    r.m_ = m;
    return r;
  }

  Kind kind() const { return kind_; }
  double coefficient() const { return c_; }
  double exponent() const { return p_; }
  double budget() const { return m_; }

 private:
  RunningCostModel() = default;
  Kind kind_ = Kind::power;
  double c_ = 1.0, p_ = 2.0, m_ = 0.0;
};

// Relative slack on the cap so that an effort saturated at M by construction
// is not declared infeasible by rounding.
inline constexpr double kCapRelativeSlack = 1e-12;

struct RunningCostValue {
  bool feasible = true;
  double value = 0.0;                // meaningful only when feasible
  std::optional<double> derivative;  // absent for the cap model
};

inline RunningCostValue running_cost(const RunningCostModel& phi, double s) {
  if (!(s >= 0.0)) throw DomainError("running_cost: effort must be >= 0");
  if (phi.kind() == RunningCostModel::Kind::power) {
    const double c = phi.coefficient(), p = phi.exponent();
    return {true, c * std::pow(s, p), c * p * std::pow(s, p - 1.0)};
  }
  if (s <= phi.budget() * (1.0 + kCapRelativeSlack)) return {true, 0.0, std::nullopt};
  return {false, 0.0, std::nullopt};
}

struct CostWeights {
  double c1 = 1.0;  // per unit area per unit time
  double c2 = 0.0;  // per unit terminal area

  CostWeights() = default;
  CostWeights(double area_rate, double terminal) : c1(area_rate), c2(terminal) {
    if (!(c1 > 0.0) || !(c2 >= 0.0)) throw DomainError("cost weights need c1 > 0 and c2 >= 0");
  }
};

// J = int phi(E) dt + c1 int area dt + c2 area(T). An infeasible running cost
// is carried as an absent value together with the first violating time.
struct CostBreakdown {
  std::optional<double> running;
  double area_term = 0.0;
  double terminal_term = 0.0;
  std::optional<double> first_violation_time;

  bool feasible() const { return running.has_value(); }
  std::optional<double> total() const {
    if (!running) return std::nullopt;
    return *running + area_term + terminal_term;
  }
};

inline CostBreakdown trajectory_cost(const Trajectory& traj, const RunningCostModel& phi, const CostWeights& w) {
  CostBreakdown out;
  const std::size_t n = traj.size();
  if (n == 0) {
    out.running = 0.0;
    return out;
  }
  std::vector<double> t(n), phi_v(n), a(traj.area.begin(), traj.area.end());
  for (std::size_t k = 0; k < n; ++k) {
    t[k] = traj.time(k);
    const auto v = running_cost(phi, traj.effort[k]);
    if (!v.feasible) {
      if (!out.first_violation_time) out.first_violation_time = t[k];
      continue;
    }
    phi_v[k] = v.value;
  }
  // The set vanishes at the extinction time: close the last interval there.
  if (traj.extinction_time && *traj.extinction_time > t.back()) {
    t.push_back(*traj.extinction_time);
    phi_v.push_back(phi_v.back());
    a.push_back(0.0);
  }
  double running = 0.0, area_int = 0.0;
  for (std::size_t k = 0; k + 1 < t.size(); ++k) {
    const double h = t[k + 1] - t[k];
    running += 0.5 * h * (phi_v[k] + phi_v[k + 1]);
    area_int += 0.5 * h * (a[k] + a[k + 1]);
  }
  out.area_term = w.c1 * area_int;
  out.terminal_term = traj.extinction_time ? 0.0 : w.c2 * traj.area.back();
  if (!out.first_violation_time) out.running = running;
  return out;
}

}  // namespace movset
