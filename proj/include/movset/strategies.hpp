#pragma once

// Constructive strategies: the convex-hull eradication plan and the rounded
// square evolution (corner arcs, merge into a disc, disc collapse).

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "movset/cost.hpp"
#include "movset/error.hpp"
#include "movset/frontsim.hpp"
#include "movset/geometry.hpp"
#include "movset/raster.hpp"
#include "movset/trajectory.hpp"

namespace movset {

namespace detail {

// Increasing f with f(lo) <= 0 <= f(hi): bisection to full precision.
template <class F>
double bisect_increasing(F&& f, double lo, double hi) {
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (f(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Null controllability through the convex hull

struct NullControlPlan {
  ConvexPolygon hull;
  double beta1 = 0.0;
  double M = 0.0;
  double time_bound = 0.0;  // diameter(hull) / beta1
};

struct NcpInfeasible {
  double effort_at_rest = 0.0;  // E(0) * perimeter(hull)
  double M = 0.0;
};

using NcpResult = std::variant<NullControlPlan, NcpInfeasible>;

inline NcpResult ncp_plan(std::span<const Point2> omega0, const EffortModel& model, double M) {
  if (omega0.size() < 3) throw DomainError("ncp_plan: need at least 3 points");
  if (!(M > 0.0)) throw DomainError("ncp_plan: M must be positive");
  ConvexPolygon hull = convex_hull(omega0);
  const double P = hull.length();
  const double rest = model.value(0.0) * P;
  if (!(rest < M)) return NcpInfeasible{rest, M};
  // Largest beta with E(beta) P <= M on the increasing branch.
  auto excess = [&](double b) { return model.value(b) * P - M; };
  double hi = 1.0;
  while (excess(hi) <= 0.0) {
    hi *= 2.0;
    if (hi > 1e15) throw DomainError("ncp_plan: effort model does not reach M / perimeter");
  }
  double lo = 0.0;
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (excess(mid) <= 0.0 ? lo : hi) = mid;
  }
  NullControlPlan plan{std::move(hull), lo, M, 0.0};
  plan.time_bound = diameter(plan.hull.vertices()) / plan.beta1;
  return plan;
}

struct NcpOptions {
  double spacing = 0.01;         // max edge length of emitted fronts
  std::size_t resolution = 400;  // contour grid for nonconvex initial sets
};

// Omega(t) = erosion of the hull by beta1 t, intersected with the free-growth
// neighbourhood of Omega0 of radius |beta0| t when Omega0 is not convex.
// Boundary speed is beta1 on the hull part and beta0 elsewhere.
inline Trajectory ncp_simulate(const NullControlPlan& plan, const ClosedCurve& omega0, const EffortModel& model,
                               double dt, const NcpOptions& opt = {}) {
  if (!(dt > 0.0)) throw DomainError("ncp_simulate: dt must be positive");
  Trajectory tr;
  tr.dt = dt;
  tr.spacing = opt.spacing;
  const double t_ext = inradius(plan.hull) / plan.beta1;
  tr.extinction_time = t_ext;
  const bool convex = std::abs(plan.hull.area() - omega0.area()) <= 1e-12 * plan.hull.area();
  const double grow = std::abs(model.beta0());
  const auto hull_box = plan.hull.to_curve().bounds();

  for (std::size_t k = 0;; ++k) {
    const double t = static_cast<double>(k) * dt;
    if (t >= t_ext) break;
    const auto eroded = erode_convex(plan.hull, plan.beta1 * t);
    if (!eroded) break;
    if (convex) {
      const auto c = refine(eroded->to_curve(), opt.spacing);
      detail::record(tr, Front(t, c, std::vector<double>(c.size(), plan.beta1)), model);
      continue;
    }
    const auto ev = eroded->vertices();
    const auto ov = omega0.vertices();
    auto f = [&](Point2 p) { return std::max(signed_distance(ev, p), signed_distance(ov, p) - grow * t); };
    const auto grid = RasterGrid::covering(hull_box, opt.resolution);
    auto loop = contour_negative_region(f, grid);
    if (loop.size() < 8) break;
    const ClosedCurve c(std::move(loop));
    std::vector<double> beta(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) {
      const double dh = signed_distance(ev, c[i]), dg = signed_distance(ov, c[i]) - grow * t;
      beta[i] = dh >= dg ? plan.beta1 : model.beta0();
    }
    detail::record(tr, Front(t, c, std::move(beta)), model);
  }
  return tr;
}

// ---------------------------------------------------------------------------
// Rounded square

// Law for the corner radius r(t). `published` is the closed form printed with
// the example; `area_balanced` is the law for which dA/dt = P - M holds
// along the corner-arc phase.
enum class RadiusLaw { published, area_balanced };

inline const char* to_string(RadiusLaw l) { return l == RadiusLaw::published ? "published" : "area_balanced"; }

inline double square_lambda(double M) {
  if (!(M > 0.0)) throw DomainError("rounded square: M must be positive");
  return (8.0 - 2.0 * std::numbers::pi) / M;
}

struct OpeningProfile {
  ClosedCurve curve;
  double perimeter = 0.0;  // closed form
  double area = 0.0;       // closed form
  double radius = 0.0;     // corner radius actually used
  bool free_growth = false;  // r < t: the profile is the t-neighbourhood
  std::vector<int> arc;    // per vertex: corner index 0..3, or -1 on a straight part
  std::vector<double> arc_angle;  // per vertex on an arc: angle from the incoming edge, in [0, pi/2]
};

// Square [-a/2, a/2]^2 grown by t with corner arcs of radius r. Each straight
// part carries about |part|/spacing vertices, each arc at least 32.
inline OpeningProfile opening_profile(double a, double t, double r, double spacing = 0.01) {
  if (!(a >= 0.0) || !(t >= 0.0) || !(r >= 0.0)) throw DomainError("opening_profile: a, t, r must be >= 0");
  if (!(spacing > 0.0)) throw DomainError("opening_profile: spacing must be positive");
  const double L = a + 2.0 * t;
  if (r > 0.5 * L * (1.0 + 1e-12)) throw DomainError("opening_profile: r > (a + 2t)/2, the corner arcs overlap");
  OpeningProfile out{ClosedCurve({{0, 0}, {1, 0}, {0, 1}}), 0.0, 0.0, 0.0, false, {}, {}};
  double rr = r;
  if (r < t) {
    rr = t;
    out.free_growth = true;
  }
  rr = std::min(rr, 0.5 * L);
  out.radius = rr;
  out.perimeter = 4.0 * L - (8.0 - 2.0 * std::numbers::pi) * rr;
  out.area = L * L - (4.0 - std::numbers::pi) * rr * rr;

  const double h = 0.5 * L;
  const double straight = L - 2.0 * rr;
  std::vector<Point2> v;
  std::vector<int> arc;
  std::vector<double> ang;
  // Corner c sits at angle (2c - 1) pi/4: c = 0 bottom-right, 1 top-right, ...
  for (int c = 0; c < 4; ++c) {
    const double phi0 = -std::numbers::pi / 2.0 + c * std::numbers::pi / 2.0;
    const Point2 dir{std::cos(phi0), std::sin(phi0)};          // outward normal of the incoming edge
    const Point2 along{-dir.y, dir.x};                           // edge direction (CCW)
    const Point2 centre = (h - rr) * dir + (h - rr) * along;     // arc centre of corner c
    // Straight part of the incoming edge, ending where the arc starts. With
    // r = 0 its first vertex is the sharp corner.
    if (straight > 0.0) {
      const Point2 start = h * dir - (0.5 * straight) * along;
      const auto ns = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(straight / spacing)));
      for (std::size_t k = 0; k < ns; ++k) {
        v.push_back(start + (straight * static_cast<double>(k) / static_cast<double>(ns)) * along);
        arc.push_back(-1);
        ang.push_back(0.0);
      }
    }
    if (rr > 0.0) {
      const double len = 0.5 * std::numbers::pi * rr;
      const auto na = std::max<std::size_t>(32, static_cast<std::size_t>(std::ceil(len / spacing)));
      for (std::size_t k = 0; k < na; ++k) {
        const double th = 0.5 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(na);
        // A disc has no straight parts: its first arc vertex doubles as the tangency point.
        v.push_back(centre + rr * Point2{std::cos(phi0 + th), std::sin(phi0 + th)});
        arc.push_back(k == 0 && straight > 0.0 ? -1 : c);
        ang.push_back(th);
      }
    }
  }
  out.curve = ClosedCurve(std::move(v));
  out.arc = std::move(arc);
  out.arc_angle = std::move(ang);
  return out;
}

// --- corner radius ---

// Published law: root of lam r - 1 + exp(-lam (t + r)) on [0, 1/lam].
// Area-balanced law: root of lam (r - t) - ln(1 + lam r) on [t, inf).
inline double square_r_implicit(double t, double M, RadiusLaw law = RadiusLaw::published) {
  if (!(t >= 0.0)) throw DomainError("square_r_implicit: t must be >= 0");
  const double lam = square_lambda(M);
  if (t == 0.0) return 0.0;
  if (law == RadiusLaw::published) {
    auto g = [&](double r) { return lam * r - 1.0 + std::exp(-lam * (t + r)); };
    return detail::bisect_increasing(g, 0.0, 1.0 / lam);
  }
  auto g = [&](double r) { return lam * (r - t) - std::log1p(lam * r); };
  double hi = t + 1.0 / lam;
  while (g(hi) < 0.0) hi = t + 2.0 * (hi - t);
  return detail::bisect_increasing(g, t, hi);
}

// dr/dt of the chosen law.
inline double square_r_rate(double r, double M, RadiusLaw law) {
  const double lam = square_lambda(M);
  if (law == RadiusLaw::published) return (1.0 - lam * r) / (lam * r);
  return (1.0 + lam * r) / (lam * r);
}

// RK4 from the small-time series r(delta) ~ sqrt(2 delta / lam) at delta =
// 1e-8, with steps min(dt, 0.02 t) so the 1/sqrt(t) start is resolved.
inline double square_r_ode(double t, double M, double dt, RadiusLaw law = RadiusLaw::published) {
  if (!(t >= 0.0) || !(dt > 0.0)) throw DomainError("square_r_ode: need t >= 0 and dt > 0");
  const double lam = square_lambda(M);
  const double delta = 1e-8;
  if (t <= delta) return t == 0.0 ? 0.0 : std::sqrt(2.0 * t / lam);
  double s = delta;
  double r = std::sqrt(2.0 * delta / lam) + (law == RadiusLaw::published ? -delta : delta);
  auto f = [&](double x) { return square_r_rate(x, M, law); };
  while (s < t) {
    const double h = std::min({dt, 0.02 * s, t - s});
    const double k1 = f(r), k2 = f(r + 0.5 * h * k1), k3 = f(r + 0.5 * h * k2), k4 = f(r + h * k3);
    r += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    s += h;
  }
  return r;
}

struct MergeResult {
  std::optional<double> t1;  // time at which the straight parts vanish
  double tau = 0.0;          // published test: f'(tau) = lam
  double gap_at_tau = 0.0;   // published test: lam (a/2 + tau) - f(tau)
};

// Published law: solution exists iff tau >= 0 and the gap at tau is <= 0;
// t1 is then the smallest root of the gap on [0, tau]. Area-balanced law:
// t1 = (exp(lam a / 2) - 1) / lam - a / 2 always.
inline MergeResult square_merge_time(double a, double M, RadiusLaw law = RadiusLaw::published) {
  if (!(a > 0.0)) throw DomainError("square_merge_time: a must be positive");
  const double lam = square_lambda(M);
  MergeResult out;
  if (law == RadiusLaw::area_balanced) {
    out.t1 = std::expm1(0.5 * lam * a) / lam - 0.5 * a;
    return out;
  }
  auto f = [&](double t) { return 1.0 - std::exp(-lam * (2.0 * t + 0.5 * a)); };
  auto gap = [&](double t) { return lam * (0.5 * a + t) - f(t); };
  out.tau = (std::numbers::ln2 - 0.5 * a * lam) / (2.0 * lam);
  if (out.tau < 0.0) {
    out.gap_at_tau = gap(0.0);
    return out;
  }
  out.gap_at_tau = gap(out.tau);
  if (out.gap_at_tau > 0.0) return out;
  // gap(0) > 0 and gap is decreasing on [0, tau].
  auto neg = [&](double t) { return -gap(t); };
  out.t1 = detail::bisect_increasing(neg, 0.0, out.tau);
  return out;
}

// --- disc phase ---

struct DiscPhase {
  std::vector<double> t;  // from the phase start
  std::vector<double> r;
  std::optional<double> extinction_time;  // from the phase start
};

// d(pi r^2)/dt = 2 pi r - M, integrated in the area variable with RK4 on
// steps of dt (the first step is `first_step` when given, to align with an
// outer grid). The final collapse from the last radius is the quadrature
// int_0^r 2 pi s / (M - 2 pi s) ds by composite Simpson.
inline DiscPhase disc_phase(double r1, double M, double dt, std::optional<double> first_step = std::nullopt,
                            double horizon = std::numeric_limits<double>::infinity()) {
  if (!(r1 > 0.0) || !(M > 0.0) || !(dt > 0.0)) throw DomainError("disc_phase: need r1, M, dt > 0");
  const bool shrinking = 2.0 * std::numbers::pi * r1 < M;
  if (!shrinking && !std::isfinite(horizon))
    throw DomainError("disc_phase: 2 pi r1 >= M, the disc does not shrink");
  const double pi = std::numbers::pi;
  auto f = [&](double A) { return 2.0 * std::sqrt(pi * std::max(A, 0.0)) - M; };
  auto collapse_time = [&](double r) {
    const int n = 256;
    const double h = r / n;
    auto g = [&](double s) { return 2.0 * pi * s / (M - 2.0 * pi * s); };
    double sum = g(0.0) + g(r);
    for (int k = 1; k < n; ++k) sum += (k % 2 ? 4.0 : 2.0) * g(k * h);
    return sum * h / 3.0;
  };
  DiscPhase out;
  double t = 0.0, A = pi * r1 * r1;
  out.t.push_back(0.0);
  out.r.push_back(r1);
  double step = first_step.value_or(dt);
  if (!(step > 0.0)) step = dt;
  while (t < horizon) {
    const double h = std::min(step, horizon - t);
    step = dt;
    if (shrinking) {
      // Hand over to the quadrature once the next step could reach the
      // singular end A = 0.
      const double r = std::sqrt(A / pi);
      const double remaining = collapse_time(r);
      if (remaining <= 4.0 * h) {
        out.extinction_time = t + remaining;
        // Remaining grid points: radius from inverting the collapse time.
        for (double tk = t + h; tk < t + remaining; tk += h) {
          const double left = t + remaining - tk;
          double lo = 0.0, hi = r;
          for (int it = 0; it < 100; ++it) {
            const double mid = 0.5 * (lo + hi);
            (collapse_time(mid) < left ? lo : hi) = mid;
          }
          out.t.push_back(tk);
          out.r.push_back(0.5 * (lo + hi));
        }
        return out;
      }
    }
    const double k1 = f(A), k2 = f(A + 0.5 * h * k1), k3 = f(A + 0.5 * h * k2), k4 = f(A + h * k3);
    A += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t += h;
    out.t.push_back(t);
    out.r.push_back(std::sqrt(A / pi));
  }
  return out;
}

// --- composite scenario ---

enum class SquarePhase { corner_arcs, disc, extinct };

inline const char* to_string(SquarePhase p) {
  switch (p) {
    case SquarePhase::corner_arcs: return "corner-arcs";
    case SquarePhase::disc: return "disc";
    case SquarePhase::extinct: return "extinct";
  }
  return "?";
}

struct RoundedSquareState {
  double a = 0.0, M = 0.0, lam = 0.0, r = 0.0;
  SquarePhase phase = SquarePhase::corner_arcs;
};

struct SquareScenarioOptions {
  RadiusLaw law = RadiusLaw::area_balanced;
  double spacing = 0.01;
  double horizon = 10.0;  // cap when the set never vanishes
};

struct SquareScenario {
  Trajectory trajectory;
  std::vector<double> r_analytic;       // corner radius, or disc radius after the merge
  std::vector<SquarePhase> phase;
  std::vector<double> max_outward_speed;  // max of -beta over the analytic profile
  std::optional<double> t1;
  std::optional<double> r1;
  RadiusLaw law = RadiusLaw::area_balanced;
};

// Inward normal speed on an arc at angle th from its incoming edge.
inline double arc_speed(double rdot, double th) { return (rdot - 1.0) * (std::cos(th) + std::sin(th)) - rdot; }

inline SquareScenario square_scenario(double a, double M, double dt, const EffortModel& model,
                                      const SquareScenarioOptions& opt = {}) {
  if (!(a > 0.0) || !(dt > 0.0)) throw DomainError("square_scenario: need a, dt > 0");
  square_lambda(M);
  SquareScenario out;
  out.law = opt.law;
  out.trajectory.dt = dt;
  out.trajectory.spacing = opt.spacing;
  const auto merge = square_merge_time(a, M, opt.law);
  out.t1 = merge.t1;

  std::size_t k = 0;
  for (;; ++k) {
    const double t = static_cast<double>(k) * dt;
    if (merge.t1 ? t >= *merge.t1 : t > opt.horizon * (1.0 + 1e-12)) break;
    const double r = square_r_implicit(t, M, opt.law);
    const auto prof = opening_profile(a, t, std::min(r, 0.5 * (a + 2.0 * t)), opt.spacing);
    const double rdot = t > 0.0 ? square_r_rate(r, M, opt.law) : 0.0;
    std::vector<double> beta(prof.curve.size(), model.beta0());
    double outward = -model.beta0();
    for (std::size_t i = 0; i < beta.size(); ++i) {
      if (prof.arc[i] < 0 || t == 0.0) continue;
      beta[i] = arc_speed(rdot, prof.arc_angle[i]);
      outward = std::max(outward, -beta[i]);
    }
    detail::record(out.trajectory, Front(t, prof.curve, std::move(beta)), model);
    out.r_analytic.push_back(r);
    out.phase.push_back(SquarePhase::corner_arcs);
    out.max_outward_speed.push_back(outward);
  }
  if (!merge.t1) return out;

  const double t1 = *merge.t1;
  const double r1 = square_r_implicit(t1, M, opt.law);
  out.r1 = r1;
  const double first = static_cast<double>(k) * dt - t1;
  const auto disc = disc_phase(r1, M, dt, first > 0.0 ? std::optional<double>(first) : std::nullopt,
                               2.0 * std::numbers::pi * r1 < M ? std::numeric_limits<double>::infinity()
                                                               : opt.horizon - t1);
  for (std::size_t j = 1; j < disc.t.size(); ++j) {
    const double t = t1 + disc.t[j];
    const double R = disc.r[j];
    const auto n = std::max<std::size_t>(32, static_cast<std::size_t>(std::ceil(2.0 * std::numbers::pi * R / opt.spacing)));
    const auto c = circle_curve({0.0, 0.0}, R, n);
    const double b = M / (2.0 * std::numbers::pi * R) - 1.0;  // -dR/dt
    detail::record(out.trajectory, Front(t, c, std::vector<double>(n, b)), model);
    out.r_analytic.push_back(R);
    out.phase.push_back(SquarePhase::disc);
    out.max_outward_speed.push_back(std::max(0.0, -b));
  }
  if (disc.extinction_time) out.trajectory.extinction_time = t1 + *disc.extinction_time;
  return out;
}

}  // namespace movset
