#pragma once

// JSON run configuration. Every object is checked against a fixed key set;
// unknown keys, wrong types and out-of-range values raise ErrorKind::Config
// before any computation starts.

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include "json.hpp"

#include "pontus/core.hpp"
#include "pontus/dynamics.hpp"
#include "pontus/protocols.hpp"
#include "pontus/sweep.hpp"

namespace pontus {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

struct ScanRange {
  double lo = 0.05;
  double hi = 30.0;
  double step = 0.05;
};

struct VelocityGridConfig {
  PointLabel point = PointLabel::F;
  double spacing = 0.1;
  double radius = 1.0;
};

struct SweepConfig {
  SweepKind kind = SweepKind::KappaTheta;
  Grid kappa{0.01, 100.0, 30, true};
  Grid axis2{0.0, 3.141592653589793, 30, false};
};

struct OutputConfig {
  std::string dir = ".";
  std::string prefix = "pontus";
};

struct RunConfig {
  std::optional<ProtocolKind> protocol;
  std::optional<ParameterPoint> S;
  std::optional<ParameterPoint> A;
  std::optional<ParameterPoint> F;
  std::optional<double> t_I;
  std::optional<ScanRange> t_I_scan;
  std::optional<double> kappa;
  double omega = 0.0;
  double epsilon = kDefaultEpsilon;
  IntegratorConfig integrator;
  std::optional<SweepConfig> sweep;
  std::optional<VelocityGridConfig> velocity_grid;
  std::optional<Grid> kappa_grid;
  OutputConfig output;
  std::optional<unsigned> jobs;
};

namespace detail {

[[noreturn]] inline void config_error(const std::string& path, const std::string& what) {
  throw Error(ErrorKind::Config, "config " + (path.empty() ? std::string("<root>") : path) + ": " + what);
}

inline void check_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) config_error(path, "expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : j.items())
    if (!ok.count(key)) config_error(path, "unknown key '" + key + "'");
}

inline std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

inline double get_number(const json& j, const std::string& path) {
  if (!j.is_number()) config_error(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) config_error(path, "must be finite");
  return v;
}

inline double get_positive(const json& j, const std::string& path) {
  const double v = get_number(j, path);
  if (!(v > 0.0)) config_error(path, "must be positive");
  return v;
}

inline int get_int(const json& j, const std::string& path) {
  if (!j.is_number_integer()) config_error(path, "expected an integer");
  return j.get<int>();
}

inline std::string get_string(const json& j, const std::string& path) {
  if (!j.is_string()) config_error(path, "expected a string");
  return j.get<std::string>();
}

inline std::array<double, 3> get_triple(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 3) config_error(path, "expected an array of 3 numbers");
  return {get_number(j[0], path + "[0]"), get_number(j[1], path + "[1]"), get_number(j[2], path + "[2]")};
}

inline ParameterPoint parse_point(const json& j, const std::string& path, PointLabel label) {
  check_keys(j, path, {"h", "gamma"});
  if (!j.contains("gamma")) config_error(path, "missing 'gamma'");
  ParameterPoint p;
  p.label = label;
  if (j.contains("h")) {
    const auto h = get_triple(j["h"], join(path, "h"));
    p.h = {h[0], h[1], h[2]};
  }
  const auto g = get_triple(j["gamma"], join(path, "gamma"));
  p.gamma = {g[0], g[1], g[2]};
  if (!p.gamma.nonnegative()) config_error(join(path, "gamma"), "rates must be nonnegative");
  return p;
}

inline Grid parse_grid(const json& j, const std::string& path, bool log_spaced) {
  check_keys(j, path, {"lo", "hi", "n"});
  for (const char* k : {"lo", "hi", "n"})
    if (!j.contains(k)) config_error(path, std::string("missing '") + k + "'");
  Grid g;
  g.lo = get_number(j["lo"], join(path, "lo"));
  g.hi = get_number(j["hi"], join(path, "hi"));
  g.n = get_int(j["n"], join(path, "n"));
  g.log_spaced = log_spaced;
  try {
    g.validate(path.c_str());
  } catch (const Error& e) {
    config_error(path, e.what());
  }
  return g;
}

inline IntegratorConfig parse_integrator(const json& j, const std::string& path) {
  check_keys(j, path, {"rel_tol", "abs_tol", "max_step", "t_cap", "sample_stride", "t_min"});
  IntegratorConfig c;
  if (j.contains("rel_tol")) c.rel_tol = get_positive(j["rel_tol"], join(path, "rel_tol"));
  if (j.contains("abs_tol")) c.abs_tol = get_positive(j["abs_tol"], join(path, "abs_tol"));
  if (j.contains("max_step")) c.max_step = get_positive(j["max_step"], join(path, "max_step"));
  if (j.contains("t_cap")) c.t_cap = get_positive(j["t_cap"], join(path, "t_cap"));
  if (j.contains("sample_stride")) c.sample_stride = get_positive(j["sample_stride"], join(path, "sample_stride"));
  if (j.contains("t_min")) c.t_min = get_number(j["t_min"], join(path, "t_min"));
  try {
    c.validate();
  } catch (const Error& e) {
    config_error(path, e.what());
  }
  return c;
}

inline PointLabel parse_label(const std::string& s, const std::string& path) {
  if (s == "S") return PointLabel::S;
  if (s == "A") return PointLabel::A;
  if (s == "F") return PointLabel::F;
  config_error(path, "expected one of S, A, F");
}

inline json point_json(const ParameterPoint& p) {
  return {{"h", {p.h.x, p.h.y, p.h.z}}, {"gamma", {p.gamma.plus, p.gamma.minus, p.gamma.z}}};
}

inline json grid_json(const Grid& g) { return {{"lo", g.lo}, {"hi", g.hi}, {"n", g.n}}; }

}  // namespace detail

inline RunConfig parse_config(const json& j) {
  using namespace detail;
  check_keys(j, "", {"schema_version", "protocol", "S", "A", "F", "t_I", "t_I_scan", "kappa", "omega", "epsilon",
                     "integrator", "sweep", "velocity_grid", "kappa_grid", "output", "jobs"});
  if (!j.contains("schema_version")) config_error("schema_version", "missing");
  if (get_int(j["schema_version"], "schema_version") != kSchemaVersion)
    config_error("schema_version", "unsupported version (expected " + std::to_string(kSchemaVersion) + ")");

  RunConfig c;
  if (j.contains("protocol")) {
    const std::string p = get_string(j["protocol"], "protocol");
    if (p == "direct")
      c.protocol = ProtocolKind::Direct;
    else if (p == "two-step")
      c.protocol = ProtocolKind::TwoStep;
    else if (p == "continuous")
      c.protocol = ProtocolKind::Continuous;
    else
      config_error("protocol", "expected direct, two-step or continuous");
  }
  if (j.contains("S")) c.S = parse_point(j["S"], "S", PointLabel::S);
  if (j.contains("A")) c.A = parse_point(j["A"], "A", PointLabel::A);
  if (j.contains("F")) c.F = parse_point(j["F"], "F", PointLabel::F);
  if (j.contains("t_I")) c.t_I = get_positive(j["t_I"], "t_I");
  if (j.contains("t_I_scan")) {
    const json& s = j["t_I_scan"];
    check_keys(s, "t_I_scan", {"lo", "hi", "step"});
    ScanRange r;
    if (s.contains("lo")) r.lo = get_positive(s["lo"], "t_I_scan.lo");
    if (s.contains("hi")) r.hi = get_positive(s["hi"], "t_I_scan.hi");
    if (s.contains("step")) r.step = get_positive(s["step"], "t_I_scan.step");
    if (r.hi < r.lo) config_error("t_I_scan", "hi must be >= lo");
    c.t_I_scan = r;
  }
  if (j.contains("kappa")) c.kappa = get_positive(j["kappa"], "kappa");
  if (j.contains("omega")) {
    c.omega = get_number(j["omega"], "omega");
    if (c.omega < 0.0) config_error("omega", "must be >= 0");
  }
  if (j.contains("epsilon")) c.epsilon = get_positive(j["epsilon"], "epsilon");
  if (j.contains("integrator")) c.integrator = parse_integrator(j["integrator"], "integrator");
  if (j.contains("sweep")) {
    const json& s = j["sweep"];
    check_keys(s, "sweep", {"kind", "kappa", "axis2"});
    SweepConfig sc;
    if (s.contains("kind")) {
      const std::string k = get_string(s["kind"], "sweep.kind");
      if (k == "kappa-theta")
        sc.kind = SweepKind::KappaTheta;
      else if (k == "kappa-omega")
        sc.kind = SweepKind::KappaOmega;
      else
        config_error("sweep.kind", "expected kappa-theta or kappa-omega");
    }
    if (s.contains("kappa")) sc.kappa = parse_grid(s["kappa"], "sweep.kappa", true);
    if (s.contains("axis2")) sc.axis2 = parse_grid(s["axis2"], "sweep.axis2", false);
    else if (sc.kind == SweepKind::KappaOmega) sc.axis2 = Grid{0.0, 2.0, 30, false};
    c.sweep = sc;
  }
  if (j.contains("velocity_grid")) {
    const json& v = j["velocity_grid"];
    check_keys(v, "velocity_grid", {"point", "spacing", "radius"});
    VelocityGridConfig vg;
    if (v.contains("point")) vg.point = parse_label(get_string(v["point"], "velocity_grid.point"), "velocity_grid.point");
    if (v.contains("spacing")) vg.spacing = get_positive(v["spacing"], "velocity_grid.spacing");
    if (v.contains("radius")) vg.radius = get_positive(v["radius"], "velocity_grid.radius");
    if (vg.radius > 1.0) config_error("velocity_grid.radius", "must be <= 1");
    c.velocity_grid = vg;
  }
  if (j.contains("kappa_grid")) c.kappa_grid = parse_grid(j["kappa_grid"], "kappa_grid", true);
  if (j.contains("output")) {
    const json& o = j["output"];
    check_keys(o, "output", {"dir", "prefix"});
    if (o.contains("dir")) c.output.dir = get_string(o["dir"], "output.dir");
    if (o.contains("prefix")) c.output.prefix = get_string(o["prefix"], "output.prefix");
  }
  if (j.contains("jobs")) {
    const int n = get_int(j["jobs"], "jobs");
    if (n < 0) config_error("jobs", "must be >= 0");
    c.jobs = static_cast<unsigned>(n);
  }
  return c;
}

inline RunConfig parse_config_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Config, std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(j);
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Config, "cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

/// Serializes back into the accepted schema; parse_config(to_json(c)) == c.
inline json to_json(const RunConfig& c) {
  using namespace detail;
  json j;
  j["schema_version"] = kSchemaVersion;
  if (c.protocol) j["protocol"] = std::string(to_string(*c.protocol));
  if (c.S) j["S"] = point_json(*c.S);
  if (c.A) j["A"] = point_json(*c.A);
  if (c.F) j["F"] = point_json(*c.F);
  if (c.t_I) j["t_I"] = *c.t_I;
  if (c.t_I_scan) j["t_I_scan"] = {{"lo", c.t_I_scan->lo}, {"hi", c.t_I_scan->hi}, {"step", c.t_I_scan->step}};
  if (c.kappa) j["kappa"] = *c.kappa;
  j["omega"] = c.omega;
  j["epsilon"] = c.epsilon;
  const auto& g = c.integrator;
  j["integrator"] = {{"rel_tol", g.rel_tol},     {"abs_tol", g.abs_tol},
                     {"max_step", g.max_step},   {"t_cap", g.t_cap},
                     {"sample_stride", g.sample_stride}, {"t_min", g.t_min}};
  if (c.sweep)
    j["sweep"] = {{"kind", std::string(to_string(c.sweep->kind))},
                  {"kappa", grid_json(c.sweep->kappa)},
                  {"axis2", grid_json(c.sweep->axis2)}};
  if (c.velocity_grid)
    j["velocity_grid"] = {{"point", std::string(to_string(c.velocity_grid->point))},
                          {"spacing", c.velocity_grid->spacing},
                          {"radius", c.velocity_grid->radius}};
  if (c.kappa_grid) j["kappa_grid"] = grid_json(*c.kappa_grid);
  j["output"] = {{"dir", c.output.dir}, {"prefix", c.output.prefix}};
  if (c.jobs) j["jobs"] = *c.jobs;
  return j;
}

}  // namespace pontus
