#pragma once

#include <algorithm>
#include <optional>
#include <vector>

#include "movset/geometry.hpp"

namespace movset {

// One time slice of a moving set: the boundary and its inward normal speed
// per vertex (same index space as the vertices).
struct Front {
  double time = 0.0;
  ClosedCurve curve;
  std::vector<double> beta;

  Front(double t, ClosedCurve c, std::vector<double> b) : time(t), curve(std::move(c)), beta(std::move(b)) {
    if (beta.size() != curve.size()) throw DomainError("Front: speed field length does not match vertex count");
  }
};

// Time-ordered fronts on a uniform step, plus the per-frame series that the
// cost and audit modules consume. When `extinction_time` is set the set is
// empty from that time on; the last stored frame precedes it.
struct Trajectory {
  std::vector<Front> frames;
  std::vector<double> effort;
  std::vector<double> area;
  std::vector<double> perimeter;
  std::vector<double> min_curvature;
  std::vector<double> max_curvature;
  std::optional<double> extinction_time;
  double dt = 0.0;
  double spacing = 0.0;

  std::size_t size() const { return frames.size(); }
  bool empty() const { return frames.empty(); }
  double time(std::size_t k) const { return frames[k].time; }

  // Marker count if every frame shares one, else nullopt.
  std::optional<std::size_t> marker_count() const {
    if (frames.empty()) return std::nullopt;
    const std::size_t n = frames.front().curve.size();
    for (const auto& f : frames)
      if (f.curve.size() != n) return std::nullopt;
    return n;
  }
};

}  // namespace movset
