#pragma once

// Junctions of two boundary arcs: the speed of a small cut across the corner,
// the first-order effort change of that cut, and an auditor that flags
// discrete corners next to actively controlled markers.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include "movset/cost.hpp"
#include "movset/error.hpp"
#include "movset/geometry.hpp"
#include "movset/trajectory.hpp"

namespace movset {

// w1: tangent of the incoming arc at the junction, w2: tangent of the
// outgoing arc (both along the counterclockwise orientation).
struct JunctionConfig {
  Point2 w1{1.0, 0.0}, w2{0.0, 1.0};
  std::optional<Point2> p_dot;
  double beta1 = 0.0, beta2 = 0.0;

  JunctionConfig() = default;
  JunctionConfig(Point2 w1_, Point2 w2_, double b1, double b2) : w1(w1_), w2(w2_), beta1(b1), beta2(b2) { validate(); }

  // beta_k = <p_dot, w_k^perp>, perp = rotation by +90 degrees.
  static JunctionConfig from_velocity(Point2 w1, Point2 w2, Point2 p_dot) {
    JunctionConfig c(w1, w2, dot(p_dot, perp(w1)), dot(p_dot, perp(w2)));
    c.p_dot = p_dot;
    return c;
  }

  void validate() const {
    if (std::abs(norm(w1) - 1.0) > 1e-9 || std::abs(norm(w2) - 1.0) > 1e-9)
      throw DomainError("JunctionConfig: tangents must be unit vectors");
    if (norm(w1 + w2) <= 1e-12) throw DomainError("JunctionConfig: antiparallel tangents");
    if (p_dot && (std::abs(dot(*p_dot, perp(w1)) - beta1) > 1e-9 * (1.0 + norm(*p_dot)) ||
                  std::abs(dot(*p_dot, perp(w2)) - beta2) > 1e-9 * (1.0 + norm(*p_dot))))
      throw DomainError("JunctionConfig: side speeds inconsistent with the junction velocity");
  }

  // > 0: outward (convex) corner, < 0: inward corner.
  double turn() const { return cross(w1, w2); }
};

// Normal speed of the cut whose tangent is parallel to w1 + w2.
inline double junction_speed(const JunctionConfig& c) {
  c.validate();
  return (c.beta1 + c.beta2) / norm(c.w1 + c.w2);
}

// First-order change of the effort per unit cut length.
inline double corner_effort_delta(const JunctionConfig& c, const EffortModel& m) {
  const double s = norm(c.w1 + c.w2);
  return s * m.value(junction_speed(c)) - m.value(c.beta1) - m.value(c.beta2);
}

// E(l b) < l E(b) for b > beta0, 1 < l <= 10.
inline ModelCheck strict_scaling_check(const EffortModel& m, std::size_t samples = 400) {
  if (samples < 100) throw DomainError("strict_scaling_check: need at least 100 samples");
  return detail::strict_scaling_grid(m, samples);
}

struct TangencyViolation {
  double t = 0.0;
  std::size_t vertex = 0;
  double turn_angle = 0.0;  // signed, radians
  bool active_left = false, active_right = false;
  double delta = 0.0;  // first-order effort change of cutting the corner
};

// 15 degrees at spacing 0.01, shrinking like sqrt(h) for finer fronts, never
// below 5 degrees.
inline double default_angle_tol(double spacing) {
  const double s = std::clamp(std::sqrt(spacing / 0.01), 1.0 / 3.0, 1.0);
  return 15.0 * std::numbers::pi / 180.0 * s;
}

inline std::vector<TangencyViolation> tangency_audit(const Front& f, const EffortModel& model,
                                                     std::optional<double> angle_tol = std::nullopt,
                                                     double active_tol = 1e-9) {
  const auto& c = f.curve;
  const std::size_t n = c.size();
  const double tol = angle_tol.value_or(default_angle_tol(c.length() / static_cast<double>(n)));
  std::vector<TangencyViolation> out;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t l = (i + n - 1) % n, r = (i + 1) % n;
    const Point2 w1 = (1.0 / distance(c[l], c[i])) * (c[i] - c[l]);
    const Point2 w2 = (1.0 / distance(c[i], c[r])) * (c[r] - c[i]);
    const double angle = std::atan2(cross(w1, w2), dot(w1, w2));
    if (std::abs(angle) <= tol) continue;
    const bool al = f.beta[l] > model.beta0() + active_tol, ar = f.beta[r] > model.beta0() + active_tol;
    if (!al && !ar) continue;
    TangencyViolation v{f.time, i, angle, al, ar, 0.0};
    if (norm(w1 + w2) > 1e-12) v.delta = corner_effort_delta(JunctionConfig(w1, w2, f.beta[l], f.beta[r]), model);
    out.push_back(v);
  }
  return out;
}

}  // namespace movset
