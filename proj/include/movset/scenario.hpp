#pragma once

// Scenario files, the run / audit / compare pipelines and the JSON run
// report used by the command-line tool.
//
// A scenario is a flat "key = value" file; '#' starts a comment. Keys:
//   shape.kind      square | circle | polygon
//   shape.a         side of the square (centred at the origin)
//   shape.R         circle radius
//   shape.file      polygon vertex file, one "x y" or "x,y" per line
//   effort.kind     canonical | hyperbolic | table
//   effort.eps      hyperbolic parameter in (0, 1)
//   effort.table    "b0:e0; b1:e1; ..." piecewise-linear knots
//   phi.kind        power | cap
//   phi.C, phi.p    power running cost C s^p
//   phi.M           effort budget of the cap
//   weights.c1, weights.c2
//   run.T, run.dt, run.spacing, run.markers
//   policy.kind     no_control | uniform | saturating | ncp | analytic
//   policy.beta1    uniform speed
//   policy.q        saturating active arclength fraction
//   policy.law      area_balanced | published (analytic corner radius)
//   output.dir, output.csv, output.svg, output.audit, output.svg_max_frames

#include <algorithm>
#include <atomic>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "movset/adjoint.hpp"
#include "movset/corners.hpp"
#include "movset/cost.hpp"
#include "movset/frontsim.hpp"
#include "movset/io.hpp"
#include "movset/raster.hpp"
#include "movset/strategies.hpp"

namespace movset {

namespace fs = std::filesystem;

struct Scenario {
  enum class Shape { square, circle, polygon };
  enum class Policy { no_control, uniform, saturating, ncp, analytic };

  Shape shape = Shape::square;
  double a = 1.0, R = 1.0;
  std::vector<Point2> polygon;
  EffortModel model = EffortModel::canonical();
  RunningCostModel phi = RunningCostModel::cap(1.0);
  CostWeights weights{1.0, 1.0};
  double T = 1.0, dt = 1e-3, spacing = 0.01;
  std::size_t markers = 0;
  Policy policy = Policy::no_control;
  double beta1 = 0.0, q = 1.0;
  RadiusLaw law = RadiusLaw::area_balanced;
  fs::path out_dir = "out";
  bool emit_csv = true, emit_svg = true, emit_audit = true;
  std::size_t svg_max_frames = 200;
  std::string text;  // the source, echoed into the output directory
};

inline const char* to_string(Scenario::Policy p) {
  switch (p) {
    case Scenario::Policy::no_control: return "no_control";
    case Scenario::Policy::uniform: return "uniform";
    case Scenario::Policy::saturating: return "saturating";
    case Scenario::Policy::ncp: return "ncp";
    case Scenario::Policy::analytic: return "analytic";
  }
  return "?";
}

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

struct Entry {
  std::string value;
  int line = 0;
};

class ConfigReader {
 public:
  explicit ConfigReader(std::map<std::string, Entry> kv) : kv_(std::move(kv)) {}

  bool has(const std::string& k) const { return kv_.count(k) != 0; }
  int line(const std::string& k) const { return has(k) ? kv_.at(k).line : 0; }

  std::string str(const std::string& k, std::optional<std::string> def = std::nullopt) {
    used_.insert(k);
    if (!has(k)) {
      if (def) return *def;
      throw ConfigError(k, 0, "missing required key");
    }
    return kv_.at(k).value;
  }

  double number(const std::string& k, std::optional<double> def = std::nullopt) {
    if (!has(k)) {
      used_.insert(k);
      if (def) return *def;
      throw ConfigError(k, 0, "missing required key");
    }
    const auto s = str(k);
    std::size_t pos = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != s.size() || !std::isfinite(v)) throw ConfigError(k, line(k), "not a number: '" + s + "'");
    return v;
  }

  double positive(const std::string& k, std::optional<double> def = std::nullopt) {
    const double v = number(k, def);
    if (!(v > 0.0)) throw ConfigError(k, line(k), "must be positive");
    return v;
  }

  bool flag(const std::string& k, bool def) {
    const auto s = str(k, def ? "true" : "false");
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    throw ConfigError(k, line(k), "expected true or false");
  }

  std::string choice(const std::string& k, const std::vector<std::string>& options,
                     std::optional<std::string> def = std::nullopt) {
    const auto s = str(k, def);
    if (std::find(options.begin(), options.end(), s) == options.end()) {
      std::string all;
      for (const auto& o : options) all += (all.empty() ? "" : " | ") + o;
      throw ConfigError(k, line(k), "expected one of " + all + ", got '" + s + "'");
    }
    return s;
  }

  void reject_unused() const {
    for (const auto& [k, e] : kv_)
      if (!used_.count(k)) throw ConfigError(k, e.line, "unknown or unused key");
  }

 private:
  std::map<std::string, Entry> kv_;
  std::set<std::string> used_;
};

inline std::vector<Point2> read_polygon_file(const fs::path& p) {
  std::ifstream f(p);
  if (!f) throw ConfigError("shape.file", 0, "cannot read " + p.string());
  std::vector<Point2> v;
  std::string line;
  int n = 0;
  while (std::getline(f, line)) {
    ++n;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    Point2 q;
    if (!(ss >> q.x >> q.y)) throw ConfigError("shape.file", n, "expected 'x y' in " + p.string());
    v.push_back(q);
  }
  if (signed_area(v) < 0.0) std::reverse(v.begin(), v.end());
  return v;
}

}  // namespace detail

// Parses scenario text; relative paths resolve against `base`.
inline Scenario parse_scenario(const std::string& text, const fs::path& base = ".") {
  std::map<std::string, detail::Entry> kv;
  std::istringstream in(text);
  std::string raw;
  int n = 0;
  while (std::getline(in, raw)) {
    ++n;
    const auto line = detail::trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("", n, "expected 'key = value'");
    const auto key = detail::trim(line.substr(0, eq)), value = detail::trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("", n, "empty key");
    if (kv.count(key)) throw ConfigError(key, n, "duplicate key (first on line " + std::to_string(kv[key].line) + ")");
    kv[key] = {value, n};
  }
  detail::ConfigReader r(std::move(kv));
  Scenario s;
  s.text = text;

  const auto shape = r.choice("shape.kind", {"square", "circle", "polygon"});
  if (shape == "square") {
    s.shape = Scenario::Shape::square;
    s.a = r.positive("shape.a");
  } else if (shape == "circle") {
    s.shape = Scenario::Shape::circle;
    s.R = r.positive("shape.R");
  } else {
    s.shape = Scenario::Shape::polygon;
    fs::path p = r.str("shape.file");
    if (p.is_relative()) p = base / p;
    s.polygon = detail::read_polygon_file(p);
    try {
      ClosedCurve check(s.polygon);
    } catch (const InvalidCurve& e) {
      throw ConfigError("shape.file", r.line("shape.file"), e.what());
    }
  }

  const auto effort = r.choice("effort.kind", {"canonical", "hyperbolic", "table"}, "canonical");
  try {
    if (effort == "hyperbolic") {
      s.model = EffortModel::hyperbolic(r.positive("effort.eps"));
    } else if (effort == "table") {
      std::vector<std::pair<double, double>> knots;
      std::istringstream ks(r.str("effort.table"));
      std::string item;
      while (std::getline(ks, item, ';')) {
        item = detail::trim(item);
        if (item.empty()) continue;
        const auto colon = item.find(':');
        if (colon == std::string::npos) throw DomainError("table knot '" + item + "' is not 'beta:effort'");
        knots.emplace_back(std::stod(item.substr(0, colon)), std::stod(item.substr(colon + 1)));
      }
      s.model = EffortModel::from_table(std::move(knots));
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    const std::string key = effort == "table" ? "effort.table" : "effort.eps";
    throw ConfigError(key, r.line(key), e.what());
  }

  const auto phi = r.choice("phi.kind", {"power", "cap"});
  if (phi == "power") {
    const double C = r.positive("phi.C", 1.0), p = r.number("phi.p", 2.0);
    if (!(p > 1.0)) throw ConfigError("phi.p", r.line("phi.p"), "must be > 1");
    s.phi = RunningCostModel::power(C, p);
  } else {
    s.phi = RunningCostModel::cap(r.positive("phi.M"));
  }
  const double c1 = r.positive("weights.c1", 1.0), c2 = r.number("weights.c2", 0.0);
  if (c2 < 0.0) throw ConfigError("weights.c2", r.line("weights.c2"), "must be >= 0");
  s.weights = CostWeights(c1, c2);

  s.T = r.positive("run.T");
  s.dt = r.positive("run.dt");
  if (s.dt > s.T) throw ConfigError("run.dt", r.line("run.dt"), "larger than run.T");
  s.spacing = r.positive("run.spacing", 0.01);
  if (r.has("run.markers")) {
    const double m = r.number("run.markers");
    if (m < 8 || m != std::floor(m)) throw ConfigError("run.markers", r.line("run.markers"), "must be an integer >= 8");
    s.markers = static_cast<std::size_t>(m);
  }

  const auto pol = r.choice("policy.kind", {"no_control", "uniform", "saturating", "ncp", "analytic"});
  if (pol == "no_control") {
    s.policy = Scenario::Policy::no_control;
  } else if (pol == "uniform") {
    s.policy = Scenario::Policy::uniform;
    s.beta1 = r.number("policy.beta1");
    if (!(s.beta1 > s.model.beta0()))
      throw ConfigError("policy.beta1", r.line("policy.beta1"), "must exceed beta0 of the effort model");
  } else {
    if (phi != "cap") throw ConfigError("policy.kind", r.line("policy.kind"), pol + " needs phi.kind = cap");
    if (pol == "saturating") {
      s.policy = Scenario::Policy::saturating;
      s.q = r.number("policy.q", 1.0);
      if (!(s.q > 0.0 && s.q <= 1.0)) throw ConfigError("policy.q", r.line("policy.q"), "must lie in (0, 1]");
    } else if (pol == "ncp") {
      s.policy = Scenario::Policy::ncp;
    } else {
      s.policy = Scenario::Policy::analytic;
      if (s.shape != Scenario::Shape::square)
        throw ConfigError("policy.kind", r.line("policy.kind"), "analytic needs shape.kind = square");
      s.law = r.choice("policy.law", {"area_balanced", "published"}, "area_balanced") == "published"
                  ? RadiusLaw::published
                  : RadiusLaw::area_balanced;
    }
  }

  s.out_dir = r.str("output.dir", "out");
  if (s.out_dir.is_relative() && r.has("output.dir")) s.out_dir = base / s.out_dir;
  s.emit_csv = r.flag("output.csv", true);
  s.emit_svg = r.flag("output.svg", true);
  s.emit_audit = r.flag("output.audit", true);
  const double k = r.number("output.svg_max_frames", 200.0);
  if (k < 2 || k != std::floor(k)) throw ConfigError("output.svg_max_frames", r.line("output.svg_max_frames"), "must be an integer >= 2");
  s.svg_max_frames = static_cast<std::size_t>(k);
  r.reject_unused();
  return s;
}

inline Scenario load_scenario(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("", 0, "cannot read " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  auto s = parse_scenario(ss.str(), path.parent_path().empty() ? fs::path(".") : path.parent_path());
  if (s.out_dir == "out") s.out_dir = fs::path("out") / path.stem();
  return s;
}

inline ClosedCurve initial_curve(const Scenario& s) {
  switch (s.shape) {
    case Scenario::Shape::square: return square_curve({-0.5 * s.a, -0.5 * s.a}, s.a);
    case Scenario::Shape::circle: {
      // Match the marker count so resampling keeps the vertices on the circle.
      const auto n = s.markers ? s.markers
                               : std::max<std::size_t>(64, static_cast<std::size_t>(std::llround(2.0 * std::numbers::pi * s.R / s.spacing)));
      return circle_curve({0.0, 0.0}, s.R, n);
    }
    case Scenario::Shape::polygon: return ClosedCurve(s.polygon);
  }
  throw DomainError("unknown shape");
}

// ---------------------------------------------------------------------------
// Report

struct ValidatorSummary {
  std::string name;
  std::string status;  // pass | report | fail | skipped
  nlohmann::json detail;
};

struct RunReport {
  std::string policy;
  CostBreakdown cost;
  std::optional<double> extinction_time;
  std::size_t frames = 0;
  std::optional<std::string> halted;  // runtime error; outputs are partial
  std::vector<ValidatorSummary> validators;
  std::vector<fs::path> files;

  bool hard_violation() const {
    if (halted) return true;
    return std::any_of(validators.begin(), validators.end(), [](const auto& v) { return v.status == "fail"; });
  }
  int exit_code() const { return hard_violation() ? 1 : 0; }
};

inline nlohmann::json to_json(const RunReport& r) {
  nlohmann::json j;
  j["policy"] = r.policy;
  j["frames"] = r.frames;
  auto opt = [](const std::optional<double>& x) { return x ? nlohmann::json(*x) : nlohmann::json(nullptr); };
  j["cost"] = {{"running", opt(r.cost.running)},
               {"area_term", r.cost.area_term},
               {"terminal_term", r.cost.terminal_term},
               {"total", opt(r.cost.total())},
               {"first_violation_time", opt(r.cost.first_violation_time)}};
  j["extinction_time"] = opt(r.extinction_time);
  j["halted"] = r.halted ? nlohmann::json(*r.halted) : nlohmann::json(nullptr);
  j["validators"] = nlohmann::json::array();
  for (const auto& v : r.validators) j["validators"].push_back({{"name", v.name}, {"status", v.status}, {"detail", v.detail}});
  j["files"] = nlohmann::json::array();
  for (const auto& f : r.files) j["files"].push_back(f.generic_string());
  j["exit_code"] = r.exit_code();
  return j;
}

// ---------------------------------------------------------------------------
// Audits

namespace detail {

inline nlohmann::json finite_or_null(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); }

inline void run_audits(const Trajectory& tr, const Scenario& s, RunReport& rep, const std::optional<fs::path>& dir) {
  if (tr.size() < 2) {
    rep.validators.push_back({"audits", "skipped", {{"reason", "fewer than two frames"}}});
    return;
  }
  // Shrink rate (one-sided Lipschitz / Hoelder bound).
  try {
    const auto sr = shrink_rate_validator(tr, s.model, s.phi);
    rep.validators.push_back({"shrink_rate", sr.pass ? "pass" : "fail",
                              {{"c0", sr.c0}, {"C", sr.C}, {"exponent", sr.exponent}, {"worst_ratio", sr.worst_ratio},
                               {"worst_t0", sr.worst_t0}, {"worst_t1", sr.worst_t1}, {"pairs", sr.pairs},
                               {"violations", sr.violations}}});
  } catch (const SingularModel& e) {
    rep.validators.push_back({"shrink_rate", "skipped", {{"reason", e.what()}}});
  }
  // Saturation.
  if (s.phi.kind() == RunningCostModel::Kind::cap) {
    const auto sat = saturation_check(tr, s.phi.budget(), s.model);
    const std::size_t controlled = static_cast<std::size_t>(std::count(sat.controlled.begin(), sat.controlled.end(), true));
    rep.validators.push_back({"saturation",
                              sat.hard_violations ? "fail" : (sat.unsaturated_controlled ? "report" : "pass"),
                              {{"hard_violations", sat.hard_violations},
                               {"unsaturated_controlled", sat.unsaturated_controlled},
                               {"controlled_frames", controlled},
                               {"worst_controlled_deficit", sat.worst_controlled_deficit}}});
  } else {
    rep.validators.push_back({"saturation", "skipped", {{"reason", "power running cost"}}});
  }
  // Constant curvature on the active set.
  const auto cc = cc_check(tr, s.model);
  double worst_spread = 0.0;
  for (const auto& x : cc.spread)
    if (x) worst_spread = std::max(worst_spread, *x);
  rep.validators.push_back({"constant_curvature", cc.failures ? "report" : "pass",
                            {{"failing_frames", cc.failures}, {"worst_spread", worst_spread}}});
  // Minimum principle.
  try {
    const auto Y = solve_adjoint(tr, s.model, s.weights.c1, s.weights.c2);
    const auto lam = multiplier(tr, s.phi, Y, s.model);
    const std::size_t stride = std::max<std::size_t>(1, tr.size() / 200);
    const auto pmp = pmp_residual(tr, Y, lam, s.model, stride);
    nlohmann::json cases;
    for (int c = 1; c <= 4; ++c) cases[to_string(static_cast<PmpCase>(c))] = pmp.case_counts[c];
    rep.validators.push_back({"pmp", pmp.violations() ? "report" : "pass",
                              {{"max_finite_residual", pmp.max_finite_residual},
                               {"case_counts", cases},
                               {"case3_violations", pmp.violations()},
                               {"frames_without_multiplier", pmp.skipped_frames}}});
    if (dir) {
      io::write_pmp_csv(*dir / "pmp.csv", tr, pmp, Y, lam);
      rep.files.push_back(*dir / "pmp.csv");
    }
  } catch (const SingularModel& e) {
    rep.validators.push_back({"pmp", "skipped", {{"reason", e.what()}}});
  } catch (const DomainError& e) {
    rep.validators.push_back({"pmp", "skipped", {{"reason", e.what()}}});
  }
  // Tangency at active corners.
  std::vector<TangencyViolation> tv;
  for (const auto& f : tr.frames) {
    auto v = tangency_audit(f, s.model);
    tv.insert(tv.end(), v.begin(), v.end());
  }
  rep.validators.push_back({"tangency", tv.empty() ? "pass" : "report", {{"violations", tv.size()}}});
  if (dir) {
    io::write_violations_csv(*dir / "tangency.csv", tv);
    rep.files.push_back(*dir / "tangency.csv");
  }
}

inline void emit(const Trajectory& tr, const Scenario& s, RunReport& rep, const fs::path& dir,
                 const io::ExtraColumns* extra) {
  fs::create_directories(dir);
  {
    std::ofstream f(dir / "scenario.cfg");
    f << s.text;
  }
  rep.files.push_back(dir / "scenario.cfg");
  if (tr.empty()) return;
  const auto idx = io::frame_selection(tr.size(), s.svg_max_frames);
  if (s.emit_csv) {
    io::write_series_csv(dir / "series.csv", tr, extra);
    io::write_fronts_csv(dir / "fronts.csv", tr, idx);
    rep.files.push_back(dir / "series.csv");
    rep.files.push_back(dir / "fronts.csv");
  }
  if (s.emit_svg) {
    const auto svgs = io::write_svg_frames(dir / "svg", tr, idx);
    if (!svgs.empty()) rep.files.push_back(dir / "svg");
  }
}

inline void finish_report(const Trajectory& tr, const Scenario& s, RunReport& rep) {
  rep.frames = tr.size();
  rep.extinction_time = tr.extinction_time;
  rep.cost = trajectory_cost(tr, s.phi, s.weights);
  if (!rep.cost.feasible())
    rep.validators.push_back({"admissibility", "fail", {{"first_violation_time", *rep.cost.first_violation_time}}});
}

inline void write_report(const RunReport& rep, const fs::path& dir) {
  std::ofstream f(dir / "report.json");
  f << to_json(rep).dump(2) << '\n';
}

}  // namespace detail

// Runs the pipeline of the scenario's policy, writes outputs into
// `s.out_dir`, and returns the report (also written as report.json).
inline RunReport run_scenario(const Scenario& s) {
  RunReport rep;
  rep.policy = to_string(s.policy);
  const fs::path dir = s.out_dir;
  fs::create_directories(dir);
  Trajectory tr;
  io::ExtraColumns extra;
  bool has_extra = false;
  const ClosedCurve initial = initial_curve(s);
  try {
    switch (s.policy) {
      case Scenario::Policy::no_control:
      case Scenario::Policy::uniform:
      case Scenario::Policy::saturating: {
        SimulationOptions opt;
        opt.T = s.T;
        opt.dt = s.dt;
        opt.markers = s.markers;
        opt.spacing = s.spacing;
        const auto policy = s.policy == Scenario::Policy::no_control ? ControlPolicy::no_control()
                            : s.policy == Scenario::Policy::uniform  ? ControlPolicy::uniform(s.beta1)
                                                                     : ControlPolicy::saturating(s.phi.budget(), s.q);
        tr = simulate(initial, policy, s.model, opt);
        break;
      }
      case Scenario::Policy::ncp: {
        const auto plan = ncp_plan(initial.vertices(), s.model, s.phi.budget());
        if (const auto* bad = std::get_if<NcpInfeasible>(&plan)) {
          rep.validators.push_back({"ncp_feasibility", "fail", {{"effort_at_rest", bad->effort_at_rest}, {"M", bad->M}}});
          break;
        }
        const auto& p = std::get<NullControlPlan>(plan);
        rep.validators.push_back({"ncp_feasibility", "pass", {{"beta1", p.beta1}, {"time_bound", p.time_bound}}});
        NcpOptions opt;
        opt.spacing = s.spacing;
        tr = ncp_simulate(p, initial, s.model, s.dt, opt);
        break;
      }
      case Scenario::Policy::analytic: {
        SquareScenarioOptions opt;
        opt.law = s.law;
        opt.spacing = s.spacing;
        opt.horizon = s.T;
        auto sc = square_scenario(s.a, s.phi.budget(), s.dt, s.model, opt);
        // Keep the run inside the horizon.
        while (!sc.trajectory.empty() && sc.trajectory.frames.back().time > s.T * (1.0 + 1e-12)) {
          sc.trajectory.frames.pop_back();
          sc.trajectory.effort.pop_back();
          sc.trajectory.area.pop_back();
          sc.trajectory.perimeter.pop_back();
          sc.trajectory.min_curvature.pop_back();
          sc.trajectory.max_curvature.pop_back();
          sc.r_analytic.pop_back();
          sc.phase.pop_back();
        }
        if (sc.trajectory.extinction_time && *sc.trajectory.extinction_time > s.T) sc.trajectory.extinction_time.reset();
        tr = std::move(sc.trajectory);
        extra.r_analytic = std::move(sc.r_analytic);
        for (auto ph : sc.phase) extra.phase.push_back(to_string(ph));
        has_extra = true;
        if (sc.t1) rep.validators.push_back({"merge", "pass", {{"t1", *sc.t1}, {"r1", *sc.r1}, {"law", to_string(sc.law)}}});
        else rep.validators.push_back({"merge", "report", {{"t1", nullptr}, {"law", to_string(sc.law)}}});
        break;
      }
    }
  } catch (const SimulationHalted& h) {
    tr = h.partial();
    rep.halted = h.what();
  } catch (const PolicyError& e) {
    rep.halted = e.what();
  }
  detail::finish_report(tr, s, rep);
  detail::emit(tr, s, rep, dir, has_extra ? &extra : nullptr);
  if (s.emit_audit) detail::run_audits(tr, s, rep, dir);
  rep.files.push_back(dir / "report.json");
  detail::write_report(rep, dir);
  return rep;
}

inline RunReport run_scenario_file(const fs::path& path, const std::optional<fs::path>& out = std::nullopt) {
  auto s = load_scenario(path);
  if (out) s.out_dir = *out;
  return run_scenario(s);
}

// Rebuilds the trajectory stored in a run directory.
inline Trajectory load_run(const fs::path& dir, const Scenario& s) {
  Trajectory tr;
  for (auto& f : io::read_fronts_csv(dir / "fronts.csv")) detail::record(tr, std::move(f), s.model);
  if (tr.size() >= 2) tr.dt = tr.time(1) - tr.time(0);
  tr.spacing = s.spacing;
  std::ifstream rep(dir / "report.json");
  if (rep) {
    const auto j = nlohmann::json::parse(rep, nullptr, false);
    if (!j.is_discarded() && j.contains("extinction_time") && j["extinction_time"].is_number())
      tr.extinction_time = j["extinction_time"].get<double>();
  }
  return tr;
}

// Re-runs the audits on the frames stored in a run directory.
inline RunReport audit_run(const fs::path& dir) {
  auto s = load_scenario(dir / "scenario.cfg");
  RunReport rep;
  rep.policy = to_string(s.policy);
  const auto tr = load_run(dir, s);
  detail::finish_report(tr, s, rep);
  const fs::path out = dir / "audit";
  fs::create_directories(out);
  detail::run_audits(tr, s, rep, out);
  rep.files.push_back(out / "report.json");
  detail::write_report(rep, out);
  return rep;
}

// ---------------------------------------------------------------------------
// Analytic comparison

// The analytic set at time t: the corner-arc opening before the merge, the
// disc after it, nullopt once it has vanished.
inline std::optional<ClosedCurve> analytic_square(double a, double M, double t, RadiusLaw law, double spacing = 0.005) {
  const auto merge = square_merge_time(a, M, law);
  if (!merge.t1 || t < *merge.t1) {
    const double r = square_r_implicit(t, M, law);
    return opening_profile(a, t, std::min(r, 0.5 * (a + 2.0 * t)), spacing).curve;
  }
  const double r1 = square_r_implicit(*merge.t1, M, law);
  double R = r1;
  if (t > *merge.t1) {
    const double shrinking = 2.0 * std::numbers::pi * r1 < M;
    const auto d = disc_phase(r1, M, 1e-4, std::nullopt, t - *merge.t1);
    if (shrinking && d.extinction_time && *d.extinction_time <= t - *merge.t1) return std::nullopt;
    R = d.r.back();
  }
  const auto n = std::max<std::size_t>(64, static_cast<std::size_t>(std::ceil(2.0 * std::numbers::pi * R / spacing)));
  return circle_curve({0.0, 0.0}, R, n);
}

struct CompareMetrics {
  std::vector<double> t;
  std::vector<double> symmetric_difference;
  double max = 0.0, mean = 0.0;
  double raster_cell = 0.0;
};

inline CompareMetrics compare_to_analytic(const std::vector<Front>& frames, double a, double M,
                                          RadiusLaw law = RadiusLaw::area_balanced, std::size_t resolution = 400) {
  if (frames.empty()) throw DomainError("compare_to_analytic: no frames");
  CompareMetrics out;
  for (const auto& f : frames) {
    const auto ref = analytic_square(a, M, f.time, law);
    double d;
    if (ref) {
      const auto est = symmetric_difference_area(f.curve, *ref, resolution);
      d = est.area;
      out.raster_cell = std::max(out.raster_cell, est.cell);
    } else {
      d = f.curve.area();
    }
    out.t.push_back(f.time);
    out.symmetric_difference.push_back(d);
    out.max = std::max(out.max, d);
    out.mean += d;
  }
  out.mean /= static_cast<double>(frames.size());
  return out;
}

inline CompareMetrics compare_run(const fs::path& dir, double a, double M) {
  const auto s = load_scenario(dir / "scenario.cfg");
  if (s.shape != Scenario::Shape::square) throw DomainError("compare: the run's shape is not a square");
  if (std::abs(s.a - a) > 1e-12 * std::max(1.0, a))
    throw DomainError("compare: run side " + io::num(s.a) + " does not match --a " + io::num(a));
  const auto m = compare_to_analytic(io::read_fronts_csv(dir / "fronts.csv"), a, M, s.law);
  auto f = io::open_out(dir / "compare.csv");
  f << "t,symmetric_difference\n";
  for (std::size_t k = 0; k < m.t.size(); ++k) f << io::num(m.t[k]) << ',' << io::num(m.symmetric_difference[k]) << '\n';
  return m;
}

// ---------------------------------------------------------------------------
// Sweep

struct SweepResult {
  fs::path config;
  int exit_code = 0;
  std::string message;
};

// One scenario per worker task; results in input order.
inline std::vector<SweepResult> sweep(const std::vector<fs::path>& configs, std::size_t workers = 0) {
  std::vector<SweepResult> out(configs.size());
  if (configs.empty()) return out;
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, configs.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < configs.size();) {
      out[i].config = configs[i];
      try {
        const auto rep = run_scenario_file(configs[i]);
        out[i].exit_code = rep.exit_code();
        out[i].message = rep.halted ? *rep.halted : "ok";
      } catch (const ConfigError& e) {
        out[i].exit_code = 2;
        out[i].message = e.what();
      } catch (const std::exception& e) {
        out[i].exit_code = 1;
        out[i].message = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  return out;
}

}  // namespace movset
