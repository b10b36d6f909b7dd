#pragma once

// CSV and SVG writers, and the reader for stored fronts.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "movset/adjoint.hpp"
#include "movset/corners.hpp"
#include "movset/error.hpp"
#include "movset/trajectory.hpp"

namespace movset::io {

inline std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::ofstream open_out(const std::filesystem::path& p) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream f(p);
  if (!f) throw Error("cannot write " + p.string());
  return f;
}

// Optional trailing columns of the series CSV.
struct ExtraColumns {
  std::vector<double> r_analytic;
  std::vector<std::string> phase;
};

// t, area, perimeter, effort, min_curvature, max_curvature[, r_analytic, phase]
inline void write_series_csv(const std::filesystem::path& path, const Trajectory& tr, const ExtraColumns* extra = nullptr) {
  auto f = open_out(path);
  f << "t,area,perimeter,effort,min_curvature,max_curvature";
  if (extra) f << ",r_analytic,phase";
  f << '\n';
  for (std::size_t k = 0; k < tr.size(); ++k) {
    f << num(tr.time(k)) << ',' << num(tr.area[k]) << ',' << num(tr.perimeter[k]) << ',' << num(tr.effort[k]) << ','
      << num(tr.min_curvature[k]) << ',' << num(tr.max_curvature[k]);
    if (extra) f << ',' << num(extra->r_analytic[k]) << ',' << extra->phase[k];
    f << '\n';
  }
}

// Every `stride`-th frame so that at most `max_frames` are selected; the
// last frame is always included.
inline std::vector<std::size_t> frame_selection(std::size_t frames, std::size_t max_frames = 200) {
  std::vector<std::size_t> idx;
  if (!frames) return idx;
  const std::size_t stride = std::max<std::size_t>(1, (frames + max_frames - 2) / std::max<std::size_t>(1, max_frames - 1));
  for (std::size_t k = 0; k < frames; k += stride) idx.push_back(k);
  if (idx.back() != frames - 1) idx.push_back(frames - 1);
  return idx;
}

// frame, t, vertex, x, y, beta
inline void write_fronts_csv(const std::filesystem::path& path, const Trajectory& tr, const std::vector<std::size_t>& idx) {
  auto f = open_out(path);
  f << "frame,t,vertex,x,y,beta\n";
  for (std::size_t k : idx) {
    const auto& fr = tr.frames[k];
    for (std::size_t i = 0; i < fr.curve.size(); ++i)
      f << k << ',' << num(fr.time) << ',' << i << ',' << num(fr.curve[i].x) << ',' << num(fr.curve[i].y) << ','
        << num(fr.beta[i]) << '\n';
  }
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

// Reads fronts.csv back into a trajectory (series recomputed by the caller).
inline std::vector<Front> read_fronts_csv(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot read " + path.string());
  std::string line;
  std::getline(f, line);
  if (line != "frame,t,vertex,x,y,beta") throw Error(path.string() + ": unexpected header");
  std::map<long, std::pair<double, std::pair<std::vector<Point2>, std::vector<double>>>> frames;
  std::size_t row = 1;
  while (std::getline(f, line)) {
    ++row;
    if (line.empty()) continue;
    const auto c = split_csv_line(line);
    if (c.size() != 6) throw Error(path.string() + ": malformed row " + std::to_string(row));
    auto& fr = frames[std::stol(c[0])];
    fr.first = std::stod(c[1]);
    fr.second.first.push_back({std::stod(c[3]), std::stod(c[4])});
    fr.second.second.push_back(std::stod(c[5]));
  }
  std::vector<Front> out;
  for (auto& [k, fr] : frames) out.emplace_back(fr.first, ClosedCurve(std::move(fr.second.first)), std::move(fr.second.second));
  return out;
}

// One SVG per selected frame, all sharing the viewBox of the union of the
// selected frames' bounding boxes.
inline std::vector<std::filesystem::path> write_svg_frames(const std::filesystem::path& dir, const Trajectory& tr,
                                                           const std::vector<std::size_t>& idx) {
  std::vector<std::filesystem::path> paths;
  if (idx.empty()) return paths;
  BoundingBox box = tr.frames[idx[0]].curve.bounds();
  for (std::size_t k : idx) box.expand(tr.frames[k].curve.bounds());
  const double pad = 0.05 * std::max(box.width(), box.height());
  const double x0 = box.lo.x - pad, y0 = box.lo.y - pad, w = box.width() + 2 * pad, h = box.height() + 2 * pad;
  std::filesystem::create_directories(dir);
  for (std::size_t k : idx) {
    char name[32];
    std::snprintf(name, sizeof name, "frame_%05zu.svg", k);
    const auto p = dir / name;
    auto f = open_out(p);
    // y grows downward in SVG: flip with a transform so the picture is upright.
    f << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"" << num(x0) << ' ' << num(-(y0 + h)) << ' ' << num(w) << ' '
      << num(h) << "\">\n";
    f << "<title>t = " << num(tr.time(k)) << "</title>\n";
    f << "<g transform=\"scale(1,-1)\"><polygon fill=\"#9ecae1\" stroke=\"#08519c\" stroke-width=\"" << num(0.004 * w)
      << "\" points=\"";
    const auto& c = tr.frames[k].curve;
    for (std::size_t i = 0; i < c.size(); ++i) f << (i ? " " : "") << num(c[i].x) << ',' << num(c[i].y);
    f << "\"/></g>\n</svg>\n";
    paths.push_back(p);
  }
  return paths;
}

// t, marker, residual, case, Y, lambda
inline void write_pmp_csv(const std::filesystem::path& path, const Trajectory& tr, const PmpReport& rep,
                          const AdjointField& Y, const MultiplierSeries& lam) {
  auto f = open_out(path);
  f << "t,marker,residual,case,Y,lambda\n";
  for (std::size_t r = 0; r < rep.points.size(); ++r) {
    const std::size_t k = rep.frames[r];
    for (std::size_t i = 0; i < rep.points[r].size(); ++i)
      f << num(tr.time(k)) << ',' << i << ',' << num(rep.points[r][i].residual) << ',' << to_string(rep.points[r][i].label)
        << ',' << num(Y.Y[k][i]) << ',' << (lam.lambda[k] ? num(*lam.lambda[k]) : std::string()) << '\n';
  }
}

// t, vertex, turn_angle, active_left, active_right, delta
inline void write_violations_csv(const std::filesystem::path& path, const std::vector<TangencyViolation>& v) {
  auto f = open_out(path);
  f << "t,vertex,turn_angle,active_left,active_right,delta\n";
  for (const auto& x : v)
    f << num(x.t) << ',' << x.vertex << ',' << num(x.turn_angle) << ',' << (x.active_left ? 1 : 0) << ','
      << (x.active_right ? 1 : 0) << ',' << num(x.delta) << '\n';
}

}  // namespace movset::io
