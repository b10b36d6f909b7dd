#pragma once

// Backward adjoint Y along fixed markers, the multiplier lambda(t), and the
// minimum-principle / saturation / constant-curvature auditors.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "movset/cost.hpp"
#include "movset/error.hpp"
#include "movset/trajectory.hpp"

namespace movset {

// Y[k][i]: adjoint at frame k, marker i.
struct AdjointField {
  std::vector<double> t;
  std::vector<std::vector<double>> Y;
  double c1 = 0.0, c2 = 0.0;

  std::size_t frames() const { return Y.size(); }
  std::size_t markers() const { return Y.empty() ? 0 : Y.front().size(); }
};

// Slack above beta0 below which a marker counts as uncontrolled.
inline constexpr double kActiveTol = 1e-9;

inline bool is_active(const EffortModel& m, double beta) { return beta > m.beta0() + kActiveTol; }

// (beta - E/E') * omega, with the right-limit convention at the kink:
// E(beta0) = 0 so the ratio is 0 when E'(beta0+) > 0.
inline double adjoint_coefficient(const EffortModel& m, double beta, double omega) {
  if (beta <= m.beta0()) {
    if (!(m.derivative(m.beta0()) > 0.0))
      throw SingularModel("solve_adjoint: E'(beta0+) = 0, the adjoint coefficient is undefined on inactive markers");
    return m.beta0() * omega;
  }
  const double d = m.derivative(beta);
  if (!(d > 0.0)) throw SingularModel("solve_adjoint: E'(beta) = 0 on an active marker");
  return (beta - m.value(beta) / d) * omega;
}

// Per-marker backward RK4 for Y_t = a(t) Y - c1, Y(T) = c2, with a linearly
// interpolated between stored frames. T is the last frame time.
inline AdjointField solve_adjoint(const Trajectory& tr, const EffortModel& model, double c1, double c2) {
  if (tr.size() < 2) throw DomainError("solve_adjoint: need at least two frames");
  const auto n = tr.marker_count();
  if (!n) throw DomainError("solve_adjoint: frames do not share a marker grid");
  const std::size_t K = tr.size();

  std::vector<std::vector<double>> a(K, std::vector<double>(*n));
  for (std::size_t k = 0; k < K; ++k) {
    const auto& f = tr.frames[k];
    const auto omega = curvatures(f.curve);
    for (std::size_t i = 0; i < *n; ++i) a[k][i] = adjoint_coefficient(model, f.beta[i], omega[i]);
  }

  AdjointField out;
  out.c1 = c1;
  out.c2 = c2;
  out.t.resize(K);
  for (std::size_t k = 0; k < K; ++k) out.t[k] = tr.time(k);
  out.Y.assign(K, std::vector<double>(*n, c2));
  for (std::size_t k = K - 1; k-- > 0;) {
    const double h = out.t[k + 1] - out.t[k];
    for (std::size_t i = 0; i < *n; ++i) {
      // Backward in time: s = t_{k+1} - t, dY/ds = -(a Y - c1).
      const double a1 = a[k + 1][i], a0 = a[k][i], am = 0.5 * (a0 + a1);
      auto f = [&](double coef, double y) { return -(coef * y - c1); };
      const double y = out.Y[k + 1][i];
      const double k1 = f(a1, y);
      const double k2 = f(am, y + 0.5 * h * k1);
      const double k3 = f(am, y + 0.5 * h * k2);
      const double k4 = f(a0, y + h * k3);
      out.Y[k][i] = y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Multiplier

struct MultiplierSeries {
  enum class Mode { smooth, constrained };
  Mode mode = Mode::smooth;
  std::vector<std::optional<double>> lambda;  // nullopt: no active marker (flagged)
  std::vector<double> spread;                 // constrained: max - min of Y/E' on the active set
  std::vector<std::size_t> flagged_frames;
};

inline MultiplierSeries multiplier(const Trajectory& tr, const RunningCostModel& phi, const AdjointField& Y,
                                   const EffortModel& model) {
  if (Y.frames() != tr.size()) throw DomainError("multiplier: adjoint field does not match the trajectory");
  MultiplierSeries out;
  const std::size_t K = tr.size();
  out.lambda.resize(K);
  out.spread.assign(K, 0.0);
  if (phi.kind() == RunningCostModel::Kind::power) {
    out.mode = MultiplierSeries::Mode::smooth;
    for (std::size_t k = 0; k < K; ++k) out.lambda[k] = *running_cost(phi, tr.effort[k]).derivative;
    return out;
  }
  out.mode = MultiplierSeries::Mode::constrained;
  for (std::size_t k = 0; k < K; ++k) {
    const auto& beta = tr.frames[k].beta;
    double hi = -std::numeric_limits<double>::infinity(), lo = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < beta.size(); ++i) {
      if (!is_active(model, beta[i])) continue;
      const double r = Y.Y[k][i] / model.derivative(beta[i]);
      hi = std::max(hi, r);
      lo = std::min(lo, r);
    }
    if (hi == -std::numeric_limits<double>::infinity()) {
      out.flagged_frames.push_back(k);
      continue;
    }
    out.lambda[k] = hi;
    out.spread[k] = hi - lo;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Minimum principle

enum class PmpCase { endpoint = 1, flat = 2, unbounded = 3, interior = 4 };

inline const char* to_string(PmpCase c) {
  switch (c) {
    case PmpCase::endpoint: return "1";
    case PmpCase::flat: return "2";
    case PmpCase::unbounded: return "3";
    case PmpCase::interior: return "interior";
  }
  return "?";
}

struct PmpPoint {
  double residual = 0.0;  // +inf for the unbounded case
  PmpCase label = PmpCase::endpoint;
};

// g(b) = lambda E(b) - Y b over b >= beta0; residual g(beta) - inf g.
inline PmpPoint pmp_point(const EffortModel& m, double lambda, double Y, double beta) {
  auto g = [&](double b) { return lambda * m.value(b) - Y * b; };
  const double scale = 1.0 + std::abs(lambda) + std::abs(Y);
  const double b0 = m.beta0();
  const double tail = lambda * m.recession_slope() - Y;
  PmpPoint out;
  double best;
  if (tail < -1e-8 * scale) {
    out.label = PmpCase::unbounded;
    out.residual = std::numeric_limits<double>::infinity();
    return out;
  }
  if (std::abs(tail) <= 1e-8 * scale) {
    out.label = PmpCase::flat;
    best = std::min({g(b0), g(beta), lambda * m.asymptote_intercept()});
  } else if (lambda * m.derivative(b0) - Y >= -1e-8 * scale) {
    out.label = PmpCase::endpoint;
    best = std::min(g(b0), g(beta));
  } else {
    out.label = PmpCase::interior;
    double hi = b0 + 1.0;
    while (g(hi) < g(0.5 * (b0 + hi)) && hi - b0 < 1e12) hi = b0 + 2.0 * (hi - b0);
    double lo = b0;
    const double r = (std::sqrt(5.0) - 1.0) / 2.0;
    for (int it = 0; it < 200 && hi - lo > 1e-14 * (1.0 + std::abs(hi)); ++it) {
      const double x1 = hi - r * (hi - lo), x2 = lo + r * (hi - lo);
      if (g(x1) < g(x2))
        hi = x2;
      else
        lo = x1;
    }
    best = std::min({g(b0), g(0.5 * (lo + hi)), g(beta)});
  }
  const double res = g(beta) - best;
  // Rounding floor of evaluating g at beta.
  out.residual = res <= 1e-12 * scale * (1.0 + std::abs(beta)) ? 0.0 : res;
  return out;
}

struct PmpReport {
  std::vector<std::vector<PmpPoint>> points;  // [frame][marker]
  std::vector<std::size_t> frames;            // trajectory frame index of each row
  double max_finite_residual = 0.0;
  std::size_t case_counts[5] = {0, 0, 0, 0, 0};
  std::size_t skipped_frames = 0;  // no multiplier available
  std::size_t violations() const { return case_counts[3]; }
};

// Audit frames 0, stride, 2*stride, ...
inline PmpReport pmp_residual(const Trajectory& tr, const AdjointField& Y, const MultiplierSeries& lam,
                              const EffortModel& model, std::size_t stride = 1) {
  if (Y.frames() != tr.size() || lam.lambda.size() != tr.size())
    throw DomainError("pmp_residual: fields are not aligned with the trajectory");
  if (stride == 0) stride = 1;
  PmpReport rep;
  for (std::size_t k = 0; k < tr.size(); k += stride) {
    if (!lam.lambda[k]) {
      ++rep.skipped_frames;
      continue;
    }
    const auto& beta = tr.frames[k].beta;
    std::vector<PmpPoint> row(beta.size());
    for (std::size_t i = 0; i < beta.size(); ++i) {
      row[i] = pmp_point(model, *lam.lambda[k], Y.Y[k][i], beta[i]);
      ++rep.case_counts[static_cast<int>(row[i].label)];
      if (std::isfinite(row[i].residual)) rep.max_finite_residual = std::max(rep.max_finite_residual, row[i].residual);
    }
    rep.points.push_back(std::move(row));
    rep.frames.push_back(k);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Constant curvature on the active set

struct CurvatureSpread {
  std::vector<std::optional<double>> spread;  // nullopt: empty active set
  std::vector<bool> pass;
  std::size_t failures = 0;
};

// active[k][i] marks the active markers of frame k; empty outer vector means
// "use beta > beta0".
inline CurvatureSpread cc_check(const Trajectory& tr, const EffortModel& model, double tol = 0.05,
                                const std::vector<std::vector<bool>>& active = {}) {
  CurvatureSpread out;
  out.spread.resize(tr.size());
  out.pass.assign(tr.size(), true);
  for (std::size_t k = 0; k < tr.size(); ++k) {
    const auto& f = tr.frames[k];
    const auto kappa = curvatures(f.curve);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo, amax = 0.0;
    for (std::size_t i = 0; i < kappa.size(); ++i) {
      amax = std::max(amax, std::abs(kappa[i]));
      const bool on = active.empty() ? is_active(model, f.beta[i]) : active[k][i];
      if (!on) continue;
      lo = std::min(lo, kappa[i]);
      hi = std::max(hi, kappa[i]);
    }
    if (hi < lo) continue;
    out.spread[k] = hi - lo;
    if (hi - lo > tol * amax) {
      out.pass[k] = false;
      ++out.failures;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Saturation

struct SaturationReport {
  std::vector<double> deficit;           // M - effort
  std::vector<bool> controlled;          // some marker active
  std::size_t hard_violations = 0;       // effort > M
  std::size_t unsaturated_controlled = 0;  // controlled frames with |deficit| > tol M
  double worst_controlled_deficit = 0.0;
  bool pass() const { return hard_violations == 0 && unsaturated_controlled == 0; }
};

inline SaturationReport saturation_check(const Trajectory& tr, double M, const EffortModel& model, double tol = 1e-3) {
  SaturationReport rep;
  for (std::size_t k = 0; k < tr.size(); ++k) {
    const double d = M - tr.effort[k];
    rep.deficit.push_back(d);
    const auto& b = tr.frames[k].beta;
    const bool ctl = std::any_of(b.begin(), b.end(), [&](double x) { return is_active(model, x); });
    rep.controlled.push_back(ctl);
    if (tr.effort[k] > M * (1.0 + kCapRelativeSlack)) ++rep.hard_violations;
    if (ctl) {
      rep.worst_controlled_deficit = std::max(rep.worst_controlled_deficit, std::abs(d));
      if (std::abs(d) > tol * M) ++rep.unsaturated_controlled;
    }
  }
  return rep;
}

}  // namespace movset
