#pragma once

// Bit-mask rasterization of closed curves on a shared grid. Used for the
// set-difference validation metrics and for contouring implicit regions.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <vector>

#include "movset/geometry.hpp"

namespace movset {

// Uniform grid of square cells over a box; cell centers are sample points.
struct RasterGrid {
  Point2 origin;
  double cell = 1.0;
  std::size_t nx = 0;
  std::size_t ny = 0;

  // Square cells covering `box` (padded by one cell) with `resolution` cells
  // along the longer side.
  static RasterGrid covering(BoundingBox box, std::size_t resolution) {
    const double side = std::max(box.width(), box.height());
    RasterGrid g;
    g.cell = side / static_cast<double>(resolution);
    g.origin = {box.lo.x - g.cell, box.lo.y - g.cell};
    g.nx = static_cast<std::size_t>(std::ceil(box.width() / g.cell)) + 2;
    g.ny = static_cast<std::size_t>(std::ceil(box.height() / g.cell)) + 2;
    return g;
  }

  double cell_area() const { return cell * cell; }
  std::size_t words_per_row() const { return (nx + 63) / 64; }
  Point2 center(std::size_t i, std::size_t j) const {
    return {origin.x + (static_cast<double>(i) + 0.5) * cell, origin.y + (static_cast<double>(j) + 0.5) * cell};
  }
};

// Row-major bit mask on a RasterGrid.
class RasterMask {
 public:
  explicit RasterMask(const RasterGrid& g) : grid_(g), bits_(g.words_per_row() * g.ny, 0) {}

  const RasterGrid& grid() const { return grid_; }

  void set_range(std::size_t row, std::size_t i0, std::size_t i1) {  // [i0, i1)
    std::uint64_t* w = bits_.data() + row * grid_.words_per_row();
    for (std::size_t i = i0; i < i1;) {
      const std::size_t word = i / 64, bit = i % 64;
      const std::size_t take = std::min<std::size_t>(64 - bit, i1 - i);
      const std::uint64_t m = take == 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << take) - 1) << bit;
      w[word] |= m;
      i += take;
    }
  }

  void set(std::size_t i, std::size_t j) { bits_[j * grid_.words_per_row() + i / 64] |= std::uint64_t{1} << (i % 64); }
  bool test(std::size_t i, std::size_t j) const {
    return (bits_[j * grid_.words_per_row() + i / 64] >> (i % 64)) & 1U;
  }

  std::size_t count() const {
    std::size_t c = 0;
    for (auto w : bits_) c += static_cast<std::size_t>(std::popcount(w));
    return c;
  }

  double area() const { return static_cast<double>(count()) * grid_.cell_area(); }

  // |this \ other| in cells.
  std::size_t count_minus(const RasterMask& other) const {
    std::size_t c = 0;
    for (std::size_t k = 0; k < bits_.size(); ++k) c += static_cast<std::size_t>(std::popcount(bits_[k] & ~other.bits_[k]));
    return c;
  }

  std::size_t count_xor(const RasterMask& other) const {
    std::size_t c = 0;
    for (std::size_t k = 0; k < bits_.size(); ++k) c += static_cast<std::size_t>(std::popcount(bits_[k] ^ other.bits_[k]));
    return c;
  }

  RasterMask& operator&=(const RasterMask& o) {
    for (std::size_t k = 0; k < bits_.size(); ++k) bits_[k] &= o.bits_[k];
    return *this;
  }

 private:
  RasterGrid grid_;
  std::vector<std::uint64_t> bits_;
};

// Even-odd scanline fill sampled at cell centers.
inline RasterMask rasterize(std::span<const Point2> v, const RasterGrid& g) {
  RasterMask mask(g);
  std::vector<std::vector<double>> xs(g.ny);
  const std::size_t n = v.size();
  for (std::size_t e = 0; e < n; ++e) {
    Point2 a = v[e], b = v[(e + 1) % n];
    if (a.y == b.y) continue;
    if (a.y > b.y) std::swap(a, b);
    // Rows whose center y lies in [a.y, b.y).
    const double f0 = (a.y - g.origin.y) / g.cell - 0.5;
    const double f1 = (b.y - g.origin.y) / g.cell - 0.5;
    const auto j0 = static_cast<long long>(std::max(0.0, std::ceil(f0)));
    const auto j1 = std::min(static_cast<long long>(g.ny) - 1, static_cast<long long>(std::ceil(f1)) - 1);
    for (long long j = j0; j <= j1; ++j) {
      const double y = g.origin.y + (static_cast<double>(j) + 0.5) * g.cell;
      if (y < a.y || y >= b.y) continue;
      xs[static_cast<std::size_t>(j)].push_back(a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y));
    }
  }
  for (std::size_t j = 0; j < g.ny; ++j) {
    auto& row = xs[j];
    std::sort(row.begin(), row.end());
    for (std::size_t k = 0; k + 1 < row.size(); k += 2) {
      // Cells with center x in [row[k], row[k+1]).
      const double c0 = std::ceil((row[k] - g.origin.x) / g.cell - 0.5);
      const double c1 = std::ceil((row[k + 1] - g.origin.x) / g.cell - 0.5);
      const auto i0 = static_cast<std::size_t>(std::clamp(c0, 0.0, static_cast<double>(g.nx)));
      const auto i1 = static_cast<std::size_t>(std::clamp(c1, 0.0, static_cast<double>(g.nx)));
      if (i1 > i0) mask.set_range(j, i0, i1);
    }
  }
  return mask;
}

inline RasterMask rasterize(const ClosedCurve& c, const RasterGrid& g) { return rasterize(c.vertices(), g); }

struct AreaEstimate {
  double area = 0.0;
  double cell = 0.0;           // grid cell edge length
  std::size_t resolution = 0;  // cells along the longer side of the joint box
};

// Area of (A \ B) union (B \ A) by rasterization over the joint bounding box.
inline AreaEstimate symmetric_difference_area(const ClosedCurve& a, const ClosedCurve& b,
                                              std::size_t resolution = 1024) {
  BoundingBox box = a.bounds();
  box.expand(b.bounds());
  const RasterGrid g = RasterGrid::covering(box, resolution);
  const auto ma = rasterize(a, g), mb = rasterize(b, g);
  return {static_cast<double>(ma.count_xor(mb)) * g.cell_area(), g.cell, resolution};
}

// Zero level set {f = 0} of a scalar field sampled on the grid nodes, traced
// by marching squares; returns the longest closed loop oriented
// counterclockwise around {f < 0}. Empty when the region is empty.
inline std::vector<Point2> contour_negative_region(const std::function<double(Point2)>& f, const RasterGrid& g) {
  const std::size_t nx = g.nx + 1, ny = g.ny + 1;  // nodes
  std::vector<double> val(nx * ny);
  auto node = [&](std::size_t i, std::size_t j) {
    return Point2{g.origin.x + static_cast<double>(i) * g.cell, g.origin.y + static_cast<double>(j) * g.cell};
  };
  for (std::size_t j = 0; j < ny; ++j)
    for (std::size_t i = 0; i < nx; ++i) {
      double v = f(node(i, j));
      if (v == 0.0) v = 1e-300;  // keep the sign test strict
      val[j * nx + i] = v;
    }
  // Edge ids: horizontal edge (i,j)-(i+1,j) -> 2*(j*nx+i); vertical (i,j)-(i,j+1) -> 2*(j*nx+i)+1.
  auto h_id = [&](std::size_t i, std::size_t j) { return 2 * (j * nx + i); };
  auto v_id = [&](std::size_t i, std::size_t j) { return 2 * (j * nx + i) + 1; };
  auto crossing = [&](std::size_t id) {
    const std::size_t base = id / 2;
    const std::size_t i = base % nx, j = base / nx;
    const Point2 p = node(i, j);
    const Point2 q = (id % 2 == 0) ? node(i + 1, j) : node(i, j + 1);
    const double fp = val[j * nx + i];
    const double fq = (id % 2 == 0) ? val[j * nx + i + 1] : val[(j + 1) * nx + i];
    const double u = fp / (fp - fq);
    return p + u * (q - p);
  };
  // Directed segments with the negative region on the left.
  std::map<std::size_t, std::size_t> next;
  for (std::size_t j = 0; j + 1 < ny; ++j)
    for (std::size_t i = 0; i + 1 < nx; ++i) {
      // Corners counterclockwise: 0=(i,j) 1=(i+1,j) 2=(i+1,j+1) 3=(i,j+1); edge k joins corner k and k+1.
      const bool neg[4] = {val[j * nx + i] < 0, val[j * nx + i + 1] < 0, val[(j + 1) * nx + i + 1] < 0,
                           val[(j + 1) * nx + i] < 0};
      const std::size_t edge[4] = {h_id(i, j), v_id(i + 1, j), h_id(i, j + 1), v_id(i, j)};
      std::vector<std::size_t> out_edges, in_edges;
      for (int k = 0; k < 4; ++k) {
        const bool a = neg[k], b = neg[(k + 1) % 4];
        if (a == b) continue;
        // Walking the cell boundary counterclockwise, a negative-to-positive
        // edge is where the contour enters the cell.
        if (a && !b) in_edges.push_back(edge[k]);
        else out_edges.push_back(edge[k]);
      }
      if (in_edges.size() == 1) {
        next[in_edges[0]] = out_edges[0];
      } else if (in_edges.size() == 2) {
        const double centre = 0.25 * (val[j * nx + i] + val[j * nx + i + 1] + val[(j + 1) * nx + i + 1] + val[(j + 1) * nx + i]);
        // Saddle: connect so that the negative corners are joined when the
        // center is negative, separated otherwise.
        const bool join = centre < 0;
        if (join == neg[0]) {
          next[in_edges[0]] = out_edges[0];
          next[in_edges[1]] = out_edges[1];
        } else {
          next[in_edges[0]] = out_edges[1];
          next[in_edges[1]] = out_edges[0];
        }
      }
    }
  std::vector<Point2> best;
  while (!next.empty()) {
    std::vector<Point2> loop;
    const std::size_t start = next.begin()->first;
    std::size_t cur = start;
    while (true) {
      auto it = next.find(cur);
      if (it == next.end()) break;
      loop.push_back(crossing(cur));
      const std::size_t nxt = it->second;
      next.erase(it);
      cur = nxt;
      if (cur == start) break;
    }
    // Crossings at grid nodes appear twice; keep one.
    std::vector<Point2> clean;
    for (const Point2& p : loop)
      if (clean.empty() || distance(clean.back(), p) > 1e-9 * g.cell) clean.push_back(p);
    while (clean.size() > 1 && distance(clean.back(), clean.front()) <= 1e-9 * g.cell) clean.pop_back();
    if (clean.size() > best.size()) best = std::move(clean);
  }
  return best;
}

}  // namespace movset
