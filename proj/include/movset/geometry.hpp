#pragma once

// Discrete closed-curve kernel shared by every other module.
//
// Conventions: curves are counterclockwise, the inner normal is the centered
// tangent rotated by +90 degrees, and curvature is positive on convex arcs.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "movset/error.hpp"

namespace movset {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend constexpr Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Point2 operator*(double s, Point2 a) { return {s * a.x, s * a.y}; }
  friend constexpr Point2 operator*(Point2 a, double s) { return {s * a.x, s * a.y}; }
  friend constexpr bool operator==(Point2 a, Point2 b) = default;
};

constexpr double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
// Rotation by +90 degrees.
constexpr Point2 perp(Point2 a) { return {-a.y, a.x}; }
inline double norm(Point2 a) { return std::hypot(a.x, a.y); }
inline double distance(Point2 a, Point2 b) { return norm(b - a); }

struct BoundingBox {
  Point2 lo{0.0, 0.0};
  Point2 hi{0.0, 0.0};

  double width() const { return hi.x - lo.x; }
  double height() const { return hi.y - lo.y; }

  void expand(Point2 p) {
    lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
    hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
  }
  void expand(const BoundingBox& b) {
    expand(b.lo);
    expand(b.hi);
  }
};

inline BoundingBox bounding_box(std::span<const Point2> pts) {
  BoundingBox b{pts.front(), pts.front()};
  for (auto p : pts) b.expand(p);
  return b;
}

// Shoelace area of a closed vertex list; positive for counterclockwise order.
inline double signed_area(std::span<const Point2> v) {
  if (v.size() < 3) {
    throw InvalidCurve(InvalidCurve::Reason::too_few_vertices, "signed_area: fewer than 3 vertices");
  }
  const Point2 o = v.front();
  double twice = 0.0;
  for (std::size_t i = 1; i + 1 < v.size(); ++i) twice += cross(v[i] - o, v[i + 1] - o);
  return 0.5 * twice;
}

inline double perimeter(std::span<const Point2> v) {
  if (v.size() < 3) {
    throw InvalidCurve(InvalidCurve::Reason::too_few_vertices, "perimeter: fewer than 3 vertices");
  }
  double p = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) p += distance(v[i], v[(i + 1) % v.size()]);
  return p;
}

namespace detail {

inline int orient_sign(Point2 a, Point2 b, Point2 c) {
  const double v = cross(b - a, c - a);
  return (v > 0.0) - (v < 0.0);
}

inline bool on_segment(Point2 a, Point2 b, Point2 p) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
         p.y <= std::max(a.y, b.y);
}

// Closed-segment intersection test.
inline bool segments_intersect(Point2 p1, Point2 p2, Point2 q1, Point2 q2) {
  const int d1 = orient_sign(q1, q2, p1);
  const int d2 = orient_sign(q1, q2, p2);
  const int d3 = orient_sign(p1, p2, q1);
  const int d4 = orient_sign(p1, p2, q2);
  if (d1 * d2 < 0 && d3 * d4 < 0) return true;
  if (d1 == 0 && on_segment(q1, q2, p1)) return true;
  if (d2 == 0 && on_segment(q1, q2, p2)) return true;
  if (d3 == 0 && on_segment(p1, p2, q1)) return true;
  if (d4 == 0 && on_segment(p1, p2, q2)) return true;
  return false;
}

}  // namespace detail

// True when the closed polyline has no self-intersection. Sweep over segments
// sorted by their left x-extent; only pairs whose x-ranges overlap are tested.
inline bool is_simple(std::span<const Point2> v) {
  const std::size_t n = v.size();
  if (n < 3) return false;
  struct Seg {
    double xmin, xmax, ymin, ymax;
  };
  std::vector<Seg> segs(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Point2 a = v[i], b = v[(i + 1) % n];
    segs[i] = {std::min(a.x, b.x), std::max(a.x, b.x), std::min(a.y, b.y), std::max(a.y, b.y)};
  }
  // Adjacent edges share a vertex; they only conflict when they fold back.
  for (std::size_t i = 0; i < n; ++i) {
    const Point2 a = v[(i + n - 1) % n], b = v[i], c = v[(i + 1) % n];
    if (cross(b - a, c - b) == 0.0 && dot(b - a, c - b) < 0.0) return false;
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return segs[a].xmin < segs[b].xmin; });

  std::vector<std::size_t> active;
  for (std::size_t s : order) {
    const Seg& cur = segs[s];
    std::size_t keep = 0;
    for (std::size_t k = 0; k < active.size(); ++k) {
      if (segs[active[k]].xmax >= cur.xmin) active[keep++] = active[k];
    }
    active.resize(keep);
    for (std::size_t other : active) {
      const Seg& o = segs[other];
      if (o.ymax < cur.ymin || cur.ymax < o.ymin) continue;
      const std::size_t d = s > other ? s - other : other - s;
      if (d == 1 || d == n - 1) continue;
      if (detail::segments_intersect(v[s], v[(s + 1) % n], v[other], v[(other + 1) % n])) return false;
    }
    active.push_back(s);
  }
  return true;
}

// Simple, counterclockwise polygon with at least three distinct consecutive
// vertices. Validated on construction; immutable afterwards.
class ClosedCurve {
 public:
  explicit ClosedCurve(std::vector<Point2> vertices) : v_(std::move(vertices)) { validate(); }

  std::span<const Point2> vertices() const { return v_; }
  std::size_t size() const { return v_.size(); }
  const Point2& operator[](std::size_t i) const { return v_[i]; }
  const Point2& at(std::size_t i) const {
    if (i >= v_.size()) throw DomainError("vertex index out of range");
    return v_[i];
  }
  // Cyclic neighbour access.
  const Point2& prev(std::size_t i) const { return v_[(i + v_.size() - 1) % v_.size()]; }
  const Point2& next(std::size_t i) const { return v_[(i + 1) % v_.size()]; }

  double area() const { return signed_area(v_); }
  double length() const { return movset::perimeter(v_); }
  BoundingBox bounds() const { return bounding_box(v_); }

 private:
  void validate() const {
    using R = InvalidCurve::Reason;
    if (v_.size() < 3) throw InvalidCurve(R::too_few_vertices, "closed curve needs at least 3 vertices");
    for (auto p : v_) {
      if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw InvalidCurve(R::non_finite, "non-finite vertex");
    }
    for (std::size_t i = 0; i < v_.size(); ++i) {
      if (v_[i] == v_[(i + 1) % v_.size()]) {
        throw InvalidCurve(R::coincident_vertices, "consecutive vertices coincide at index " + std::to_string(i));
      }
    }
    if (!(signed_area(v_) > 0.0)) throw InvalidCurve(R::clockwise, "curve is not counterclockwise (signed area <= 0)");
    if (!is_simple(v_)) throw InvalidCurve(R::self_intersecting, "curve self-intersects");
  }

  std::vector<Point2> v_;
};

inline double signed_area(const ClosedCurve& c) { return c.area(); }
inline double perimeter(const ClosedCurve& c) { return c.length(); }

// Unit inner normal at a vertex from the centered tangent.
inline Point2 inner_normal(const ClosedCurve& c, std::size_t i) {
  if (i >= c.size()) throw DomainError("inner_normal: vertex index out of range");
  const Point2 t = c.next(i) - c.prev(i);
  const double len = norm(t);
  return (1.0 / len) * perp(t);
}

// Signed curvature of the circle through the vertex and its two neighbours.
inline double curvature_at(const ClosedCurve& c, std::size_t i) {
  if (i >= c.size()) throw DomainError("curvature_at: vertex index out of range");
  const Point2 a = c.prev(i), b = c[i], d = c.next(i);
  const double denom = distance(a, b) * distance(b, d) * distance(a, d);
  if (denom == 0.0) return 0.0;
  return 2.0 * cross(b - a, d - b) / denom;
}

inline std::vector<double> curvatures(const ClosedCurve& c) {
  std::vector<double> k(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) k[i] = curvature_at(c, i);
  return k;
}

// Half the sum of the two edges adjacent to each vertex: the trapezoidal
// quadrature weight of that vertex on the closed curve.
inline std::vector<double> vertex_weights(const ClosedCurve& c) {
  const std::size_t n = c.size();
  std::vector<double> edge(n), w(n);
  for (std::size_t i = 0; i < n; ++i) edge[i] = distance(c[i], c.next(i));
  for (std::size_t i = 0; i < n; ++i) w[i] = 0.5 * (edge[(i + n - 1) % n] + edge[i]);
  return w;
}

namespace detail {

// Arclength-uniform redistribution to `count` vertices starting at vertex 0.
// When `field` is given it is linearly re-interpolated onto the new vertices.
inline std::vector<Point2> redistribute(std::span<const Point2> v, std::size_t count, std::span<const double> field,
                                        std::vector<double>* field_out) {
  const std::size_t n = v.size();
  std::vector<double> s(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) s[i + 1] = s[i] + distance(v[i], v[(i + 1) % n]);
  const double total = s[n];
  std::vector<Point2> out(count);
  if (field_out) field_out->assign(count, 0.0);
  std::size_t seg = 0;
  for (std::size_t k = 0; k < count; ++k) {
    const double target = total * static_cast<double>(k) / static_cast<double>(count);
    while (seg + 1 < n && s[seg + 1] <= target) ++seg;
    const double len = s[seg + 1] - s[seg];
    const double u = len > 0.0 ? std::clamp((target - s[seg]) / len, 0.0, 1.0) : 0.0;
    const Point2 a = v[seg], b = v[(seg + 1) % n];
    out[k] = a + u * (b - a);
    if (field_out) (*field_out)[k] = (1.0 - u) * field[seg] + u * field[(seg + 1) % n];
  }
  return out;
}

}  // namespace detail

// Resample to a fixed number of arclength-uniform vertices.
inline ClosedCurve resample_count(const ClosedCurve& c, std::size_t count) {
  if (count < 8) throw DomainError("resample: fewer than 8 vertices requested");
  return ClosedCurve(detail::redistribute(c.vertices(), count, {}, nullptr));
}

// Resample to a fixed vertex count, carrying a per-vertex field along.
inline std::pair<ClosedCurve, std::vector<double>> resample_count(const ClosedCurve& c, std::size_t count,
                                                                 std::span<const double> field) {
  if (count < 8) throw DomainError("resample: fewer than 8 vertices requested");
  if (field.size() != c.size()) throw DomainError("resample: field length does not match vertex count");
  std::vector<double> out_field;
  auto pts = detail::redistribute(c.vertices(), count, field, &out_field);
  return {ClosedCurve(std::move(pts)), std::move(out_field)};
}

// Arclength-uniform resampling with target edge length `spacing`.
inline ClosedCurve resample(const ClosedCurve& c, double spacing) {
  const double p = c.length();
  if (!(spacing > 0.0)) throw DomainError("resample: spacing must be positive");
  if (!(spacing < p / 8.0)) throw DomainError("resample: spacing too coarse for curve (needs spacing < perimeter/8)");
  const auto count = static_cast<std::size_t>(std::llround(p / spacing));
  return resample_count(c, count);
}

// Closed curve with each edge split into pieces no longer than `max_edge`;
// the polygon itself (and hence its area) is unchanged.
inline ClosedCurve refine(const ClosedCurve& c, double max_edge) {
  if (!(max_edge > 0.0)) throw DomainError("refine: max_edge must be positive");
  std::vector<Point2> out;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const Point2 a = c[i], b = c.next(i);
    const auto pieces = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(distance(a, b) / max_edge)));
    for (std::size_t k = 0; k < pieces; ++k) out.push_back(a + (static_cast<double>(k) / pieces) * (b - a));
  }
  return ClosedCurve(std::move(out));
}

inline ClosedCurve reversed(std::span<const Point2> v) {
  std::vector<Point2> r(v.rbegin(), v.rend());
  return ClosedCurve(std::move(r));
}

// Regular polygon inscribed in the circle of radius r, vertex 0 at angle 0.
inline ClosedCurve circle_curve(Point2 center, double radius, std::size_t count) {
  if (!(radius > 0.0) || count < 3) throw DomainError("circle_curve: radius must be positive and count >= 3");
  std::vector<Point2> v(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double th = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(count);
    v[i] = {center.x + radius * std::cos(th), center.y + radius * std::sin(th)};
  }
  return ClosedCurve(std::move(v));
}

// Axis-aligned square with corner `lo` and given side.
inline ClosedCurve square_curve(Point2 lo, double side) {
  if (!(side > 0.0)) throw DomainError("square_curve: side must be positive");
  return ClosedCurve({lo, {lo.x + side, lo.y}, {lo.x + side, lo.y + side}, {lo.x, lo.y + side}});
}

inline bool point_in_polygon(std::span<const Point2> v, Point2 p) {
  bool inside = false;
  const std::size_t n = v.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    if ((v[i].y > p.y) != (v[j].y > p.y)) {
      const double x = v[j].x + (p.y - v[j].y) * (v[i].x - v[j].x) / (v[i].y - v[j].y);
      if (p.x < x) inside = !inside;
    }
  }
  return inside;
}

inline double distance_to_segment(Point2 p, Point2 a, Point2 b) {
  const Point2 d = b - a;
  const double len2 = dot(d, d);
  const double u = len2 > 0.0 ? std::clamp(dot(p - a, d) / len2, 0.0, 1.0) : 0.0;
  return distance(p, a + u * d);
}

// Signed distance to the polygon boundary, negative inside.
inline double signed_distance(std::span<const Point2> v, Point2 p) {
  double d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < v.size(); ++i) d = std::min(d, distance_to_segment(p, v[i], v[(i + 1) % v.size()]));
  return point_in_polygon(v, p) ? -d : d;
}

// Convex polygon, counterclockwise, every turn a left turn or straight.
class ConvexPolygon {
 public:
  explicit ConvexPolygon(std::vector<Point2> vertices) : v_(std::move(vertices)) {
    using R = InvalidCurve::Reason;
    if (v_.size() < 3) throw InvalidCurve(R::too_few_vertices, "convex polygon needs at least 3 vertices");
    if (!(signed_area(v_) > 0.0)) throw InvalidCurve(R::clockwise, "convex polygon is not counterclockwise");
    const BoundingBox b = bounding_box(v_);
    const double scale = std::max(b.width(), b.height());
    const std::size_t n = v_.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Point2 a = v_[i], c = v_[(i + 1) % n], d = v_[(i + 2) % n];
      if (cross(c - a, d - c) < -1e-12 * scale * scale) throw InvalidCurve(R::not_convex, "polygon is not convex");
    }
  }

  std::span<const Point2> vertices() const { return v_; }
  std::size_t size() const { return v_.size(); }
  double area() const { return signed_area(v_); }
  double length() const { return movset::perimeter(v_); }
  ClosedCurve to_curve() const { return ClosedCurve(v_); }

  bool contains(Point2 p, double tol = 0.0) const {
    for (std::size_t i = 0; i < v_.size(); ++i) {
      const Point2 a = v_[i], b = v_[(i + 1) % v_.size()];
      if (cross(b - a, p - a) < -tol * norm(b - a)) return false;
    }
    return true;
  }

 private:
  std::vector<Point2> v_;
};

inline double signed_area(const ConvexPolygon& p) { return p.area(); }
inline double perimeter(const ConvexPolygon& p) { return p.length(); }

// Andrew's monotone chain; collinear points on the hull are dropped.
inline ConvexPolygon convex_hull(std::span<const Point2> points) {
  if (points.size() < 3) throw DomainError("convex_hull: need at least 3 points");
  std::vector<Point2> p(points.begin(), points.end());
  std::sort(p.begin(), p.end(), [](Point2 a, Point2 b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
  p.erase(std::unique(p.begin(), p.end()), p.end());
  std::vector<Point2> h(2 * p.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    while (k >= 2 && cross(h[k - 1] - h[k - 2], p[i] - h[k - 2]) <= 0.0) --k;
    h[k++] = p[i];
  }
  for (std::size_t i = p.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(h[k - 1] - h[k - 2], p[i] - h[k - 2]) <= 0.0) --k;
    h[k++] = p[i];
  }
  h.resize(k > 0 ? k - 1 : 0);
  if (h.size() < 3) throw DomainError("convex_hull: input points are collinear");
  return ConvexPolygon(std::move(h));
}

inline double diameter(std::span<const Point2> v) {
  double d = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i)
    for (std::size_t j = i + 1; j < v.size(); ++j) d = std::max(d, distance(v[i], v[j]));
  return d;
}

namespace detail {

// Keep the part of a convex polygon where dot(normal, x) >= offset.
inline std::vector<Point2> clip_half_plane(const std::vector<Point2>& poly, Point2 normal, double offset) {
  std::vector<Point2> out;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point2 a = poly[i], b = poly[(i + 1) % n];
    const double fa = dot(normal, a) - offset, fb = dot(normal, b) - offset;
    if (fa >= 0.0) out.push_back(a);
    if ((fa >= 0.0) != (fb >= 0.0)) out.push_back(a + (fa / (fa - fb)) * (b - a));
  }
  return out;
}

inline std::vector<Point2> drop_degenerate(std::vector<Point2> v, double tol) {
  bool changed = true;
  while (changed && v.size() >= 3) {
    changed = false;
    for (std::size_t i = 0; i < v.size() && v.size() >= 3; ++i) {
      const std::size_t n = v.size();
      const Point2 a = v[(i + n - 1) % n], b = v[i], c = v[(i + 1) % n];
      const bool duplicate = distance(a, b) <= tol;
      const bool collinear = std::abs(cross(b - a, c - b)) <= tol * (distance(a, b) + distance(b, c));
      if (duplicate || collinear) {
        v.erase(v.begin() + static_cast<std::ptrdiff_t>(i));
        changed = true;
      }
    }
  }
  return v;
}

}  // namespace detail

namespace detail {

// All edge lines moved inward by r, before degenerate-vertex cleanup.
inline std::vector<Point2> offset_clip(const ConvexPolygon& poly, double r) {
  const auto v = poly.vertices();
  const std::size_t n = v.size();
  std::vector<Point2> cur(v.begin(), v.end());
  for (std::size_t i = 0; i < n && cur.size() >= 3; ++i) {
    const Point2 a = v[i], b = v[(i + 1) % n];
    const Point2 nrm = (1.0 / distance(a, b)) * perp(b - a);
    cur = clip_half_plane(cur, nrm, dot(nrm, a) + r);
  }
  return cur;
}

}  // namespace detail

// Inner parallel body {x : B(x, r) inside poly}: every edge line moves inward
// by r. Returns nullopt once r reaches the inradius.
inline std::optional<ConvexPolygon> erode_convex(const ConvexPolygon& poly, double r) {
  if (!(r >= 0.0)) throw DomainError("erode_convex: r must be non-negative");
  if (r == 0.0) return poly;
  const BoundingBox box = bounding_box(poly.vertices());
  const double scale = std::max(box.width(), box.height());
  auto cur = detail::drop_degenerate(detail::offset_clip(poly, r), 1e-12 * scale);
  if (cur.size() < 3 || signed_area(cur) <= 1e-14 * scale * scale) return std::nullopt;
  return ConvexPolygon(std::move(cur));
}

// Largest r for which the inner parallel body has positive area.
inline double inradius(const ConvexPolygon& poly) {
  auto nonempty = [&](double r) {
    const auto cur = detail::offset_clip(poly, r);
    return cur.size() >= 3 && signed_area(cur) > 0.0;
  };
  double lo = 0.0, hi = 0.5 * diameter(poly.vertices());
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    (nonempty(mid) ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace movset
