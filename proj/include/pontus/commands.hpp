#pragma once

// CLI subcommands as library functions. Each returns the process exit code:
// 0 success, 1 config or schema error, 2 singular generator, 3 non-convergence.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "pontus/config.hpp"
#include "pontus/dynamics.hpp"
#include "pontus/mpemba.hpp"
#include "pontus/nonmarkov.hpp"
#include "pontus/protocols.hpp"
#include "pontus/sweep.hpp"

namespace pontus {

enum class ExitCode : int { Ok = 0, Config = 1, Singular = 2, NotConverged = 3 };

inline ExitCode exit_code_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::SingularGenerator: return ExitCode::Singular;
    case ErrorKind::NotConverged:
    case ErrorKind::Timeout:
    case ErrorKind::StepSizeUnderflow:
    case ErrorKind::BallViolation: return ExitCode::NotConverged;
    default: return ExitCode::Config;
  }
}

enum class LogLevel { Quiet = 0, Error = 1, Warn = 2, Info = 3, Debug = 4 };

/// PONTUS_LOG = quiet | error | warn | info | debug (default info).
inline LogLevel log_level_from_env() {
  const char* v = std::getenv("PONTUS_LOG");
  if (!v) return LogLevel::Info;
  const std::string s(v);
  if (s == "quiet" || s == "0") return LogLevel::Quiet;
  if (s == "error" || s == "1") return LogLevel::Error;
  if (s == "warn" || s == "2") return LogLevel::Warn;
  if (s == "debug" || s == "4") return LogLevel::Debug;
  return LogLevel::Info;
}

struct CommandContext {
  std::ostream* out = &std::cout;
  std::ostream* err = &std::cerr;
  LogLevel level = LogLevel::Info;
  bool with_baseline = false;

  void log(LogLevel at, const std::string& msg) const {
    if (static_cast<int>(at) <= static_cast<int>(level)) *err << "pontus: " << msg << '\n';
  }
};

namespace detail {

inline int guarded(const CommandContext& ctx, const std::function<int()>& body) {
  try {
    return body();
  } catch (const Error& e) {
    ctx.log(LogLevel::Error, std::string(to_string(e.kind())) + ": " + e.what());
    return static_cast<int>(exit_code_for(e.kind()));
  }
}

inline const ParameterPoint& require_point(const std::optional<ParameterPoint>& p, const char* name) {
  if (!p) throw Error(ErrorKind::Config, std::string("config: missing parameter point '") + name + "'");
  return *p;
}

inline std::filesystem::path output_path(const RunConfig& cfg, const std::string& suffix) {
  const std::filesystem::path dir(cfg.output.dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Config, "cannot create output directory '" + cfg.output.dir + "'");
  return dir / (cfg.output.prefix + suffix);
}

inline std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream f(p);
  if (!f) throw Error(ErrorKind::Config, "cannot write '" + p.string() + "'");
  return f;
}

inline json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

inline json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

inline json point_report(const ParameterPoint& p) {
  const AffineGenerator g = assemble_generator(p);
  const Vec3 r = steady_state_vector(g);
  return {{"r", vec_json(r)},
          {"norm", r.norm()},
          {"residual", velocity(g, r).norm()},
          {"condition_number", condition_number(g.drift)}};
}

}  // namespace detail

/// Attractor, residual |Lambda r + b| and condition number for each point present.
inline int cmd_steady_state(const RunConfig& cfg, const CommandContext& ctx = {}) {
  return detail::guarded(ctx, [&] {
    if (!cfg.S && !cfg.A && !cfg.F) throw Error(ErrorKind::Config, "config: no parameter point (S, A or F) given");
    json j;
    if (cfg.S) j["S"] = detail::point_report(*cfg.S);
    if (cfg.A) j["A"] = detail::point_report(*cfg.A);
    if (cfg.F) j["F"] = detail::point_report(*cfg.F);
    *ctx.out << j.dump(2) << '\n';
    return 0;
  });
}

/// Result document for a single protocol run.
inline json result_json(const RunConfig& cfg, const ProtocolResult& r, const std::string& trajectory_file) {
  json j;
  j["protocol"] = std::string(to_string(r.kind));
  j["params"] = to_json(cfg);
  j["tau"] = detail::opt_json(r.tau);
  j["converged"] = r.flags.converged;
  j["timed_out"] = r.flags.timed_out;
  j["inconclusive"] = r.flags.inconclusive;
  j["trajectory_file"] = trajectory_file;
  j["class"] = nullptr;
  j["gain"] = nullptr;
  j["crossings"] = nullptr;
  j["d_S"] = nullptr;
  j["d_I"] = nullptr;
  j["d_SF"] = nullptr;
  return j;
}

namespace detail {

inline ProtocolResult run_configured(const RunConfig& cfg, ProtocolKind kind) {
  const ParameterPoint& pS = require_point(cfg.S, "S");
  const ParameterPoint& pF = require_point(cfg.F, "F");
  switch (kind) {
    case ProtocolKind::Direct: return run_direct(pS, pF, cfg.epsilon, cfg.integrator);
    case ProtocolKind::TwoStep:
      if (!cfg.t_I) throw Error(ErrorKind::Config, "config: two-step protocol needs 't_I'");
      return run_two_step(pS, require_point(cfg.A, "A"), pF, *cfg.t_I, cfg.epsilon, cfg.integrator);
    case ProtocolKind::Continuous:
      if (!cfg.kappa) throw Error(ErrorKind::Config, "config: continuous protocol needs 'kappa'");
      return run_continuous(pS, pF, *cfg.kappa, cfg.omega, cfg.epsilon, cfg.integrator);
  }
  throw Error(ErrorKind::Config, "config: unknown protocol");
}

inline void write_trajectory(const std::filesystem::path& p, const Trajectory& t) {
  auto f = open_out(p);
  write_trajectory_csv(f, t);
}

inline json scan_report(const RunConfig& cfg, const CommandContext& ctx) {
  const ScanRange& s = *cfg.t_I_scan;
  const auto entries = scan_two_step(require_point(cfg.S, "S"), require_point(cfg.A, "A"),
                                     require_point(cfg.F, "F"), s.lo, s.hi, s.step, cfg.epsilon, cfg.integrator);
  const auto path = output_path(cfg, "_scan.csv");
  auto f = open_out(path);
  f << "t_I,tau,class,d_S,d_I,d_SF\n";
  json first = json::object();
  for (TwoStepClass c : {TwoStepClass::WeakTypeA, TwoStepClass::WeakTypeB, TwoStepClass::Strong})
    first[std::string(to_string(c))] = nullptr;
  for (const auto& e : entries) {
    f << fmt17(e.t_I) << ',' << (e.tau ? fmt17(*e.tau) : std::string("nan")) << ','
      << (e.tau ? std::string(to_string(e.cls)) : std::string("not-converged")) << ',' << fmt17(e.distances.d_S)
      << ',' << fmt17(e.distances.d_I) << ',' << fmt17(e.distances.d_SF) << '\n';
    if (!e.tau || e.cls == TwoStepClass::NoEffect) continue;
    auto& slot = first[std::string(to_string(e.cls))];
    if (slot.is_null()) slot = e.t_I;
  }
  ctx.log(LogLevel::Info, "two-step scan: " + std::to_string(entries.size()) + " switch times");
  return {{"scan_file", path.string()}, {"first_t_I", first}};
}

}  // namespace detail

/// Runs the configured protocol, writes the trajectory CSV and the result
/// JSON, and prints the result JSON. A direct baseline is always computed for
/// two-step runs (the class depends on it) and on request for continuous runs.
inline int cmd_simulate(const RunConfig& cfg, const CommandContext& ctx = {}) {
  return detail::guarded(ctx, [&] {
    if (!cfg.protocol) throw Error(ErrorKind::Config, "config: missing 'protocol'");
    const ProtocolKind kind = *cfg.protocol;
    if (kind == ProtocolKind::TwoStep && !cfg.t_I && !cfg.t_I_scan)
      throw Error(ErrorKind::Config, "config: two-step protocol needs 't_I' or 't_I_scan'");

    json j;
    int code = 0;
    if (kind != ProtocolKind::TwoStep || cfg.t_I) {
      const ProtocolResult r = detail::run_configured(cfg, kind);
      const auto traj_path = detail::output_path(cfg, "_trajectory.csv");
      detail::write_trajectory(traj_path, r.trajectory);
      j = result_json(cfg, r, traj_path.string());

      const bool need_baseline = kind == ProtocolKind::TwoStep || (kind == ProtocolKind::Continuous && ctx.with_baseline);
      if (need_baseline && r.tau) {
        const ProtocolResult d = detail::run_configured(cfg, ProtocolKind::Direct);
        const auto base_path = detail::output_path(cfg, "_baseline.csv");
        detail::write_trajectory(base_path, d.trajectory);
        j["baseline_file"] = base_path.string();
        j["tau_direct"] = detail::opt_json(d.tau);
        if (d.tau) {
          if (kind == ProtocolKind::TwoStep) {
            const TwoStepDistances dist = two_step_distances(*r.geometry);
            j["class"] = std::string(to_string(classify_two_step(r, d)));
            j["d_S"] = dist.d_S;
            j["d_I"] = dist.d_I;
            j["d_SF"] = dist.d_SF;
            j["gain"] = gain(*d.tau, *r.tau).g;
          } else {
            const ContinuousReport rep = compare_continuous(r, d);
            j["class"] = std::string(to_string(rep.cls));
            j["gain"] = rep.gain->g;
            j["crossings"] = rep.crossings;
            j["crossing_times"] = rep.crossing_times;
            j["parity_consistent"] = rep.parity_consistent;
            j["diagnostics"] = rep.diagnostics;
          }
        } else {
          ctx.log(LogLevel::Warn, "direct baseline did not converge before t_cap");
        }
      }
      if (!r.tau) {
        ctx.log(LogLevel::Error, "protocol did not converge before t_cap = " + fmt17(cfg.integrator.t_cap) +
                                     "; partial trajectory written");
        code = static_cast<int>(ExitCode::NotConverged);
      }
    } else {
      j["protocol"] = std::string(to_string(kind));
      j["params"] = to_json(cfg);
    }
    if (kind == ProtocolKind::TwoStep && cfg.t_I_scan) j["scan"] = detail::scan_report(cfg, ctx);

    const auto result_path = detail::output_path(cfg, "_result.json");
    auto f = detail::open_out(result_path);
    f << j.dump(2) << '\n';
    *ctx.out << j.dump(2) << '\n';
    return code;
  });
}

inline SweepSpec sweep_spec_from(const RunConfig& cfg) {
  if (!cfg.sweep) throw Error(ErrorKind::Config, "config: missing 'sweep'");
  const ParameterPoint& pS = detail::require_point(cfg.S, "S");
  const ParameterPoint& pF = detail::require_point(cfg.F, "F");
  SweepSpec s;
  s.kind = cfg.sweep->kind;
  s.gamma_S = pS.gamma;
  s.gamma_F = pF.gamma;
  s.kappa = cfg.sweep->kappa;
  s.axis2 = cfg.sweep->axis2;
  s.omega = cfg.omega;
  s.eps = cfg.epsilon;
  s.cfg = cfg.integrator;
  s.jobs = cfg.jobs.value_or(0);
  if (s.kind == SweepKind::KappaOmega) {
    if (!(pS.h == pF.h)) throw Error(ErrorKind::Config, "config: kappa-omega sweep needs S.h == F.h");
    s.field = pS.h;
  }
  try {
    s.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::Config, std::string("config: sweep: ") + e.what());
  }
  return s;
}

inline json sweep_spec_json(const SweepSpec& s) {
  auto grid = [](const Grid& g) {
    return json{{"lo", g.lo}, {"hi", g.hi}, {"n", g.n}, {"log_spaced", g.log_spaced}};
  };
  return {{"kind", std::string(to_string(s.kind))},
          {"gamma_S", {s.gamma_S.plus, s.gamma_S.minus, s.gamma_S.z}},
          {"gamma_F", {s.gamma_F.plus, s.gamma_F.minus, s.gamma_F.z}},
          {"field", s.kind == SweepKind::KappaOmega ? json{s.field.x, s.field.y, s.field.z}
                                                    : json("(sin theta, 0, cos theta)")},
          {"omega", s.kind == SweepKind::KappaTheta ? json(s.omega) : json("axis2")},
          {"axis1", {{"name", "kappa"}, {"grid", grid(s.kappa)}}},
          {"axis2", {{"name", s.kind == SweepKind::KappaTheta ? "theta" : "omega"}, {"grid", grid(s.axis2)}}},
          {"epsilon", s.eps},
          {"t_cap", s.cfg.t_cap}};
}

inline json boundary_json(const std::vector<BoundarySample>& b) {
  json arr = json::array();
  for (const auto& s : b) arr.push_back({{"kappa", s.kappa}, {"omega_min", detail::opt_json(s.omega_min)}});
  return arr;
}

/// Gain map CSV plus a JSON sidecar with the sweep spec and boundary curve.
/// Failed cells are recorded in the status column and do not change the exit code.
inline int cmd_gain_map(const RunConfig& cfg, const CommandContext& ctx = {}) {
  return detail::guarded(ctx, [&] {
    const SweepSpec spec = sweep_spec_from(cfg);
    const auto csv_path = detail::output_path(cfg, "_gain_map.csv");
    const auto json_path = detail::output_path(cfg, "_gain_map.json");
    std::mutex mu;
    std::size_t next_report = 1;
    const SweepProgress progress = [&](std::size_t done, std::size_t total) {
      std::lock_guard lock(mu);
      if (done * 10 >= next_report * total) {
        ctx.log(LogLevel::Info, "gain-map: " + std::to_string(done) + "/" + std::to_string(total) + " cells");
        next_report = done * 10 / total + 1;
      }
    };
    const GainMap map = run_sweep(spec, progress);
    {
      auto f = detail::open_out(csv_path);
      write_gain_map_csv(f, map);
    }
    std::size_t failed = 0;
    for (const auto& c : map.cells) failed += c.status != "ok";
    json side{{"spec", sweep_spec_json(spec)},
              {"params", to_json(cfg)},
              {"csv_file", csv_path.string()},
              {"rows", map.cells.size()},
              {"failed_cells", failed},
              {"boundary", boundary_json(map.boundary)}};
    auto f = detail::open_out(json_path);
    f << side.dump(2) << '\n';
    *ctx.out << json{{"csv_file", csv_path.string()}, {"sidecar_file", json_path.string()},
                     {"rows", map.cells.size()}, {"failed_cells", failed}}
                    .dump(2)
             << '\n';
    return 0;
  });
}

namespace detail {

inline std::array<ChannelRates, 3> configured_channels(const RunConfig& cfg) {
  return channel_rates(require_point(cfg.S, "S").gamma, require_point(cfg.F, "F").gamma);
}

inline json channel_boundary_json(const std::array<ChannelRates, 3>& ch, const Grid& kg) {
  json curve = json::array();
  for (double k : kg.values()) {
    json per = json::object();
    for (Channel c : kChannels) {
      const auto& r = ch[static_cast<std::size_t>(c)];
      per[std::string(to_string(c))] = opt_json(channel_boundary_omega(r.gS, r.gF, k));
    }
    curve.push_back({{"kappa", k}, {"omega_min", opt_json(boundary_omega(ch, k))}, {"channels", per}});
  }
  return curve;
}

}  // namespace detail

/// Per-channel measure, negative-rate intervals and the closed-form versus
/// quadrature comparison at the configured (kappa, omega).
inline int cmd_nm_measure(const RunConfig& cfg, const CommandContext& ctx = {}) {
  return detail::guarded(ctx, [&] {
    if (!cfg.kappa) throw Error(ErrorKind::Config, "config: nm-measure needs 'kappa'");
    const double kappa = *cfg.kappa, omega = cfg.omega;
    const auto ch = detail::configured_channels(cfg);
    json channels = json::array();
    double total = 0.0;
    for (Channel c : kChannels) {
      const auto& r = ch[static_cast<std::size_t>(c)];
      const NmChannelReport rep = channel_report(c, r.gS, r.gF, kappa, omega);
      json iv = json::array();
      for (const auto& [a, b] : rep.intervals) iv.push_back({a, b});
      double quad = 0.0;
      if (omega > 0.0 && r.gS != r.gF) {
        const double T = rep.intervals.empty() ? 1.0 : rep.intervals.back().second + 1.0;
        quad = nm_measure_quadrature(
            [&](double t) { return r.gF + (r.gS - r.gF) * std::exp(-kappa * t) * std::cos(omega * t); }, T, 1e-12,
            std::min(1.0, 0.25 * std::numbers::pi / omega));
      }
      total += rep.f_value;
      channels.push_back({{"channel", std::string(to_string(c))},
                          {"gamma_S", r.gS},
                          {"gamma_F", r.gF},
                          {"f_value", rep.f_value},
                          {"f_quadrature", quad},
                          {"n_intervals", rep.n_intervals},
                          {"n_bound", interval_count_bound(r.gS, r.gF, kappa, omega)},
                          {"intervals", iv}});
    }
    const NonMarkovVerdict v = is_non_markovian(ch, kappa, omega);
    json j{{"kappa", kappa},
           {"omega", omega},
           {"channels", channels},
           {"f_total", total},
           {"non_markovian", v.non_markovian},
           {"omega_min", detail::opt_json(boundary_omega(ch, kappa))}};
    if (cfg.kappa_grid) j["boundary"] = detail::channel_boundary_json(ch, *cfg.kappa_grid);
    *ctx.out << j.dump(2) << '\n';
    return 0;
  });
}

/// Boundary parameter alpha per channel and the curve omega_min(kappa).
inline int cmd_nm_boundary(const RunConfig& cfg, const CommandContext& ctx = {}) {
  return detail::guarded(ctx, [&] {
    const auto ch = detail::configured_channels(cfg);
    const Grid kg = cfg.kappa_grid.value_or(Grid{0.01, 100.0, 30, true});
    json channels = json::array();
    for (Channel c : kChannels) {
      const auto& r = ch[static_cast<std::size_t>(c)];
      json alpha;
      if (r.gF == 0.0 && r.gS > 0.0)
        alpha = "infinite";
      else {
        try {
          alpha = markov_boundary_alpha(r.gS, r.gF);
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::NoSolution) throw;
          alpha = "no-solution";
        }
      }
      channels.push_back({{"channel", std::string(to_string(c))}, {"gamma_S", r.gS}, {"gamma_F", r.gF},
                          {"alpha", alpha}});
    }
    const json j{{"channels", channels}, {"boundary", detail::channel_boundary_json(ch, kg)}};
    *ctx.out << j.dump(2) << '\n';
    return 0;
  });
}

/// Velocity field of one parameter point on a cubic grid inside the ball.
inline int cmd_velocity_field(const RunConfig& cfg, const CommandContext& ctx = {}) {
  return detail::guarded(ctx, [&] {
    if (!cfg.velocity_grid) throw Error(ErrorKind::Config, "config: missing 'velocity_grid'");
    const VelocityGridConfig& vg = *cfg.velocity_grid;
    const std::optional<ParameterPoint>& p =
        vg.point == PointLabel::S ? cfg.S : vg.point == PointLabel::A ? cfg.A : cfg.F;
    const std::string name(to_string(vg.point));
    const ParameterPoint& point = detail::require_point(p, name.c_str());
    const auto field = velocity_field(assemble_generator(point), vg.spacing, vg.radius);
    const auto path = detail::output_path(cfg, "_velocity.csv");
    auto f = detail::open_out(path);
    write_velocity_csv(f, field);
    *ctx.out << json{{"velocity_file", path.string()}, {"point", name}, {"n_points", field.size()}}.dump(2)
             << '\n';
    return 0;
  });
}

}  // namespace pontus
