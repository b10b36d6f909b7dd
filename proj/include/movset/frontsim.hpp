#pragma once

// Explicit front tracking x_t = beta n on a fixed marker grid, control
// policies, and the one-sided shrink-rate validator.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "movset/cost.hpp"
#include "movset/error.hpp"
#include "movset/geometry.hpp"
#include "movset/raster.hpp"
#include "movset/trajectory.hpp"

namespace movset {

// advance() produced a self-intersecting or inverted front. Carries the last
// valid front (the input of the failing step).
class TopologyHalt : public Error {
 public:
  TopologyHalt(const std::string& what, Front last) : Error(what), last_(std::move(last)) {}
  const Front& last_valid() const noexcept { return last_; }

 private:
  Front last_;
};

// simulate() stopped early; carries the frames recorded so far.
class SimulationHalted : public Error {
 public:
  SimulationHalted(const std::string& what, Trajectory partial) : Error(what), partial_(std::move(partial)) {}
  const Trajectory& partial() const noexcept { return partial_; }

 private:
  Trajectory partial_;
};

// ---------------------------------------------------------------------------
// Policies

struct ControlPolicy {
  enum class Kind { no_control, uniform, saturating, prescribed };
  using Field = std::function<double(double t, std::size_t marker, const ClosedCurve& curve)>;

  Kind kind = Kind::no_control;
  double beta1 = 0.0;  // uniform
  double M = 0.0;      // saturating budget
  double q = 0.0;      // saturating active arclength fraction
  std::size_t smoothing = 0;  // saturating: rank by curvature averaged over +- this many markers
  Field field;         // prescribed

  static ControlPolicy no_control() { return {}; }

  static ControlPolicy uniform(double beta1) {
    ControlPolicy p;
    p.kind = Kind::uniform;
    p.beta1 = beta1;
    return p;
  }

  static ControlPolicy saturating(double M, double q) {
    if (!(M > 0.0)) throw PolicyError("saturating policy needs M > 0");
    if (!(q > 0.0 && q <= 1.0)) throw PolicyError("saturating policy needs q in (0, 1]");
    ControlPolicy p;
    p.kind = Kind::saturating;
    p.M = M;
    p.q = q;
    return p;
  }

  static ControlPolicy prescribed(Field f) {
    ControlPolicy p;
    p.kind = Kind::prescribed;
    p.field = std::move(f);
    return p;
  }

  std::string name() const {
    switch (kind) {
      case Kind::no_control: return "no_control";
      case Kind::uniform: return "uniform";
      case Kind::saturating: return "saturating";
      case Kind::prescribed: return "prescribed";
    }
    return "?";
  }
};

// Curvature averaged over a window of +-half markers (periodic).
inline std::vector<double> smoothed_curvatures(const ClosedCurve& c, std::size_t half) {
  const auto kappa = curvatures(c);
  const std::size_t n = c.size();
  if (half == 0) return kappa;
  half = std::min(half, (n - 1) / 2);
  std::vector<double> out(n);
  double acc = 0.0;
  for (std::size_t j = n - half; j < n; ++j) acc += kappa[j];
  for (std::size_t j = 0; j <= half; ++j) acc += kappa[j];
  const double width = static_cast<double>(2 * half + 1);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = acc / width;
    acc += kappa[(i + half + 1) % n] - kappa[(i + n - half) % n];
  }
  return out;
}

// Vertices of the saturating active set: highest (smoothed) curvature first,
// ties by index, until their quadrature weight reaches q times the perimeter.
inline std::vector<std::size_t> saturating_active_set(const ClosedCurve& c, double q,
                                                      const std::vector<double>& weights, std::size_t smoothing) {
  const auto kappa = smoothed_curvatures(c, smoothing);
  std::vector<std::size_t> order(c.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return kappa[a] > kappa[b]; });
  const double target = q * c.length();
  double acc = 0.0;
  std::vector<std::size_t> active;
  for (std::size_t i : order) {
    if (acc >= target) break;
    active.push_back(i);
    acc += weights[i];
  }
  std::sort(active.begin(), active.end());
  return active;
}

inline std::vector<double> policy_eval(const ControlPolicy& policy, const ClosedCurve& c, double t,
                                       const EffortModel& model) {
  const std::size_t n = c.size();
  switch (policy.kind) {
    case ControlPolicy::Kind::no_control:
      return std::vector<double>(n, model.beta0());
    case ControlPolicy::Kind::uniform:
      if (!(policy.beta1 > model.beta0())) throw PolicyError("uniform policy needs beta1 > beta0");
      return std::vector<double>(n, policy.beta1);
    case ControlPolicy::Kind::saturating: {
      const auto w = vertex_weights(c);
      const std::size_t half = policy.smoothing;
      const auto active = saturating_active_set(c, policy.q, w, half);
      double ell = 0.0;
      for (std::size_t i : active) ell += w[i];
      const double e = policy.M / ell;
      double beta;
      try {
        beta = model.inverse(e);
      } catch (const DomainError&) {
        throw PolicyError("saturating policy: effort level M/l outside the range of E (M too large for the active set)");
      }
      std::vector<double> out(n, model.beta0());
      for (std::size_t i : active) out[i] = beta;
      return out;
    }
    case ControlPolicy::Kind::prescribed: {
      if (!policy.field) throw PolicyError("prescribed policy without a field");
      std::vector<double> out(n);
      for (std::size_t i = 0; i < n; ++i) {
        out[i] = policy.field(t, i, c);
        if (!std::isfinite(out[i])) throw PolicyError("prescribed field is not finite");
      }
      return out;
    }
  }
  return {};
}

inline std::vector<double> policy_eval(const ControlPolicy& policy, const Front& f, const EffortModel& model) {
  return policy_eval(policy, f.curve, f.time, model);
}

// ---------------------------------------------------------------------------
// Stepping

// Largest stable explicit step h / (2 max(|beta|, |beta0|)).
inline double stability_bound(double spacing, std::span<const double> beta, double beta0) {
  double vmax = std::abs(beta0);
  for (double b : beta) vmax = std::max(vmax, std::abs(b));
  return spacing / (2.0 * vmax);
}

namespace detail {

// Shift every vertex along its inner normal by a common distance so the
// polygon area equals `target` (first order in the shift).
inline std::vector<Point2> restore_area(const ClosedCurve& c, double target) {
  const double delta = (c.area() - target) / c.length();
  std::vector<Point2> out(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) out[i] = c[i] + delta * inner_normal(c, i);
  return out;
}

// x_i + dt beta_i s_i n_i with s_i = w_i / (|x_{i+1} - x_{i-1}| / 2): the
// vertex moves as the corner of its two offset edges, so the first-order
// area change is exactly -dt times the trapezoidal integral of beta.
inline std::vector<Point2> euler_positions(const ClosedCurve& c, std::span<const double> beta, double dt) {
  const std::size_t n = c.size();
  std::vector<Point2> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Point2 chord = c.next(i) - c.prev(i);
    const double half = 0.5 * norm(chord);
    const double w = 0.5 * (distance(c.prev(i), c[i]) + distance(c[i], c.next(i)));
    out[i] = c[i] + (dt * beta[i] * w / (half * half)) * (0.5 * perp(chord));
  }
  return out;
}

}  // namespace detail

// One explicit Euler step of x_t = beta n, then arclength-uniform resampling
// to the same marker count with beta carried along. The resampled polygon is
// corrected back to the area of the moved polygon.
inline Front advance(const Front& front, double dt) {
  if (!(dt > 0.0)) throw DomainError("advance: dt must be positive");
  const auto& c = front.curve;
  const std::size_t n = c.size();
  const auto moved = detail::euler_positions(c, front.beta, dt);
  std::optional<ClosedCurve> next;
  try {
    next.emplace(std::move(moved));
  } catch (const InvalidCurve& e) {
    throw TopologyHalt(std::string("advance: front lost simplicity (") + e.what() + ")", front);
  }
  const double area = next->area();
  try {
    auto [resampled, beta] = resample_count(*next, n, front.beta);
    ClosedCurve corrected(detail::restore_area(resampled, area));
    return Front(front.time + dt, std::move(corrected), std::move(beta));
  } catch (const InvalidCurve& e) {
    throw TopologyHalt(std::string("advance: resampled front invalid (") + e.what() + ")", front);
  }
}

struct SimulationOptions {
  double T = 1.0;
  double dt = 1e-3;
  std::size_t markers = 0;          // 0: derive from spacing
  double spacing = 0.0;             // used when markers == 0
  double extinction_fraction = 1e-6;  // extinct once area < fraction * initial area
  std::size_t record_stride = 1;    // store every k-th step as a frame
  std::size_t max_substeps = 1u << 20;
};

namespace detail {

inline void record(Trajectory& tr, Front f, const EffortModel& model) {
  const auto kappa = curvatures(f.curve);
  tr.effort.push_back(boundary_effort(f.curve, f.beta, model));
  tr.area.push_back(f.curve.area());
  tr.perimeter.push_back(f.curve.length());
  tr.min_curvature.push_back(*std::min_element(kappa.begin(), kappa.end()));
  tr.max_curvature.push_back(*std::max_element(kappa.begin(), kappa.end()));
  tr.frames.push_back(std::move(f));
}

}  // namespace detail

// Policy evaluation and advance on the uniform dt grid until T, extinction,
// or a topology halt. A step whose speed field violates the stability bound
// is split into equal substeps (policy re-evaluated on each); only the dt
// grid is recorded.
inline Trajectory simulate(const ClosedCurve& initial, const ControlPolicy& policy, const EffortModel& model,
                           const SimulationOptions& opt) {
  if (!(opt.T > 0.0) || !(opt.dt > 0.0)) throw DomainError("simulate: T and dt must be positive");
  if (opt.record_stride == 0) throw DomainError("simulate: record_stride must be >= 1");
  std::size_t n = opt.markers;
  if (n == 0) {
    if (!(opt.spacing > 0.0)) throw DomainError("simulate: need markers or spacing");
    n = static_cast<std::size_t>(std::llround(initial.length() / opt.spacing));
  }
  if (n < 8) throw DomainError("simulate: fewer than 8 markers");

  Trajectory tr;
  tr.dt = opt.dt * static_cast<double>(opt.record_stride);
  const double a_min = opt.extinction_fraction * initial.area();
  const auto steps = static_cast<std::size_t>(std::llround(opt.T / opt.dt));

  ClosedCurve c0 = resample_count(initial, n);
  tr.spacing = c0.length() / static_cast<double>(n);
  Front cur(0.0, c0, policy_eval(policy, c0, 0.0, model));
  detail::record(tr, cur, model);

  for (std::size_t k = 1; k <= steps; ++k) {
    const double t_end = static_cast<double>(k) * opt.dt;
    double t = cur.time;
    while (t < t_end) {
      const double h = cur.curve.length() / static_cast<double>(n);
      const double bound = stability_bound(h, cur.beta, model.beta0());
      const double remaining = t_end - t;
      const auto m = static_cast<std::size_t>(std::ceil(remaining / bound * (1.0 + 1e-12)));
      if (m > opt.max_substeps) throw SimulationHalted("simulate: stability bound forces too many substeps", tr);
      const double step = m <= 1 ? remaining : remaining / static_cast<double>(m);

      std::optional<Front> stepped;
      try {
        stepped.emplace(advance(cur, step));
      } catch (const TopologyHalt& halt) {
        // A front collapsing onto itself below the area threshold is extinct,
        // not a topology failure.
        const auto moved = detail::euler_positions(cur.curve, cur.beta, step);
        if (signed_area(moved) < a_min) {
          tr.extinction_time = t + step;
          return tr;
        }
        throw SimulationHalted(halt.what(), tr);
      }
      Front& next = *stepped;
      if (next.curve.area() < a_min) {
        tr.extinction_time = t + step;
        return tr;
      }
      t = (m <= 1) ? t_end : t + step;
      next.time = t;
      next.beta = policy_eval(policy, next.curve, t, model);
      cur = std::move(next);
    }
    cur.time = t_end;
    if (k % opt.record_stride == 0) detail::record(tr, cur, model);
  }
  return tr;
}

// ---------------------------------------------------------------------------
// Shrink-rate validation

// c0 = inf of L over unit space-time normals on the shrinking side, which is
// min over beta >= 0 of E(beta) / sqrt(1 + beta^2) (beta -> inf included).
inline double shrink_constant(const EffortModel& m) {
  auto g = [&](double theta) {
    if (theta >= std::numbers::pi / 2.0) return m.recession_slope();
    const double b = std::tan(theta);
    return m.value(b) / std::sqrt(1.0 + b * b);
  };
  const int samples = 4000;
  double best = g(std::numbers::pi / 2.0);
  int best_k = samples;
  for (int k = 0; k < samples; ++k) {
    const double v = g(std::numbers::pi / 2.0 * k / samples);
    if (v < best) {
      best = v;
      best_k = k;
    }
  }
  if (best_k > 0 && best_k < samples) {
    // Golden-section refinement around the best sample.
    double lo = std::numbers::pi / 2.0 * (best_k - 1) / samples, hi = std::numbers::pi / 2.0 * (best_k + 1) / samples;
    const double r = (std::sqrt(5.0) - 1.0) / 2.0;
    for (int it = 0; it < 100; ++it) {
      const double x1 = hi - r * (hi - lo), x2 = lo + r * (hi - lo);
      if (g(x1) < g(x2))
        hi = x2;
      else
        lo = x1;
    }
    best = std::min(best, g(0.5 * (lo + hi)));
  }
  return best;
}

struct ShrinkRateReport {
  bool pass = true;
  double c0 = 0.0;
  double C = 0.0;
  double exponent = 1.0;   // gamma in C * dt^gamma
  double worst_ratio = 0.0;  // max shrink / bound over checked pairs
  double worst_t0 = 0.0, worst_t1 = 0.0;
  std::size_t pairs = 0;
  std::size_t violations = 0;
  double cell = 0.0;
};

struct ShrinkRateOptions {
  std::size_t max_frames = 48;
  std::size_t resolution = 512;
  double tol = 1e-2;
};

// area(Omega(t0) \ Omega(t1)) <= C (t1 - t0)^gamma for sampled frame pairs
// t0 < t1. Raster set differences get a boundary slack of one cell times the
// two perimeters.
inline ShrinkRateReport shrink_rate_validator(const Trajectory& tr, const EffortModel& model,
                                              const RunningCostModel& phi, const ShrinkRateOptions& opt = {}) {
  if (tr.size() < 2) throw DomainError("shrink_rate_validator: need at least two frames");
  ShrinkRateReport rep;
  rep.c0 = shrink_constant(model);
  if (!(rep.c0 > 0.0)) throw SingularModel("shrink_rate_validator: c0 = 0 for this effort model");
  if (phi.kind() == RunningCostModel::Kind::cap) {
    rep.C = phi.budget() / rep.c0;
    rep.exponent = 1.0;
  } else {
    const double p = phi.exponent();
    double integral = 0.0;
    for (std::size_t k = 0; k + 1 < tr.size(); ++k)
      integral += 0.5 * (tr.time(k + 1) - tr.time(k)) * (std::pow(tr.effort[k], p) + std::pow(tr.effort[k + 1], p));
    rep.C = std::pow(integral, 1.0 / p) / rep.c0;
    rep.exponent = (p - 1.0) / p;
  }

  std::vector<std::size_t> idx;
  const std::size_t stride = std::max<std::size_t>(1, (tr.size() + opt.max_frames - 1) / opt.max_frames);
  for (std::size_t k = 0; k < tr.size(); k += stride) idx.push_back(k);
  if (idx.back() != tr.size() - 1) idx.push_back(tr.size() - 1);

  BoundingBox box = tr.frames[idx[0]].curve.bounds();
  for (std::size_t k : idx) box.expand(tr.frames[k].curve.bounds());
  const RasterGrid grid = RasterGrid::covering(box, opt.resolution);
  rep.cell = grid.cell;
  std::vector<RasterMask> masks;
  masks.reserve(idx.size());
  for (std::size_t k : idx) masks.push_back(rasterize(tr.frames[k].curve, grid));

  for (std::size_t a = 0; a < idx.size(); ++a) {
    for (std::size_t b = a + 1; b < idx.size(); ++b) {
      const double dt = tr.time(idx[b]) - tr.time(idx[a]);
      const double shrink = static_cast<double>(masks[a].count_minus(masks[b])) * grid.cell_area();
      const double slack = grid.cell * (tr.perimeter[idx[a]] + tr.perimeter[idx[b]]);
      const double bound = rep.C * std::pow(dt, rep.exponent) * (1.0 + opt.tol) + slack;
      const double ratio = shrink / bound;
      ++rep.pairs;
      if (ratio > rep.worst_ratio) {
        rep.worst_ratio = ratio;
        rep.worst_t0 = tr.time(idx[a]);
        rep.worst_t1 = tr.time(idx[b]);
      }
      if (ratio > 1.0) ++rep.violations;
    }
  }
  rep.pass = rep.violations == 0;
  return rep;
}

}  // namespace movset
