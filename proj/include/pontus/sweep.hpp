#pragma once

// Gain maps over (kappa, theta) at fixed omega and over (kappa, omega) at a
// fixed field. Cells are independent; workers pull cell indices from an
// atomic counter and write into preallocated slots, so the output does not
// depend on the number of workers.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "pontus/core.hpp"
#include "pontus/format.hpp"
#include "pontus/mpemba.hpp"
#include "pontus/nonmarkov.hpp"
#include "pontus/protocols.hpp"

namespace pontus {

struct Grid {
  double lo = 0.0;
  double hi = 1.0;
  int n = 2;
  bool log_spaced = false;

  void validate(const char* name) const {
    if (n < 2) throw Error(ErrorKind::Config, std::string(name) + " grid needs at least 2 points");
    if (!(hi > lo)) throw Error(ErrorKind::Config, std::string(name) + " grid must be strictly increasing");
    if (log_spaced && !(lo > 0.0)) throw Error(ErrorKind::Config, std::string(name) + " log grid needs lo > 0");
  }

  std::vector<double> values() const {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      const double s = static_cast<double>(i) / (n - 1);
      v[static_cast<std::size_t>(i)] =
          log_spaced ? std::exp(std::log(lo) + s * (std::log(hi) - std::log(lo))) : lo + s * (hi - lo);
    }
    v.front() = lo;
    v.back() = hi;
    return v;
  }
};

enum class SweepKind { KappaTheta, KappaOmega };

constexpr std::string_view to_string(SweepKind k) {
  return k == SweepKind::KappaTheta ? "kappa-theta" : "kappa-omega";
}

struct SweepSpec {
  SweepKind kind = SweepKind::KappaTheta;
  RateTriple gamma_S;
  RateTriple gamma_F;
  FieldVector field{1.0, 0.0, 0.0};  // kappa-omega only
  double omega = 0.0;                // kappa-theta only
  Grid kappa{0.01, 100.0, 30, true};
  Grid axis2{0.0, 1.0, 30, false};  // theta or omega
  double eps = kDefaultEpsilon;
  IntegratorConfig cfg;
  unsigned jobs = 0;  // 0: hardware concurrency

  void validate() const {
    kappa.validate("kappa");
    if (!kappa.log_spaced) throw Error(ErrorKind::Config, "kappa grid must be log-spaced");
    axis2.validate(kind == SweepKind::KappaTheta ? "theta" : "omega");
    if (kind == SweepKind::KappaOmega && axis2.lo < 0.0) throw Error(ErrorKind::Config, "omega must be >= 0");
    if (!(kappa.lo > 0.0)) throw Error(ErrorKind::Config, "kappa must be positive");
    if (!(eps > 0.0)) throw Error(ErrorKind::Config, "epsilon must be positive");
    cfg.validate();
  }
};

inline FieldVector field_from_theta(double theta) { return {std::sin(theta), 0.0, std::cos(theta)}; }

struct GainCell {
  double axis1 = 0.0;  // kappa
  double axis2 = 0.0;  // theta or omega
  double tau_dir = std::numeric_limits<double>::quiet_NaN();
  double tau_cpm = std::numeric_limits<double>::quiet_NaN();
  double gain = std::numeric_limits<double>::quiet_NaN();
  bool inconclusive = false;
  bool non_markovian = false;
  double f_total = 0.0;
  std::string status = "ok";
};

// Called from worker threads after each finished cell with (done, total).
using SweepProgress = std::function<void(std::size_t, std::size_t)>;

struct BoundarySample {
  double kappa = 0.0;
  std::optional<double> omega_min;
};

struct GainMap {
  SweepSpec spec;
  std::vector<double> axis1;
  std::vector<double> axis2;
  std::vector<GainCell> cells;  // row-major: index = i * n2 + j
  std::vector<BoundarySample> boundary;

  const GainCell& at(std::size_t i, std::size_t j) const { return cells[i * axis2.size() + j]; }
};

namespace detail {

inline void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& body) {
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, std::max<std::size_t>(n, 1)));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next.fetch_add(1); k < n; k = next.fetch_add(1)) body(k);
  };
  if (jobs <= 1) {
    worker();
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(jobs);
  for (unsigned w = 0; w < jobs; ++w) pool.emplace_back(worker);
}

struct DirectBaseline {
  std::optional<double> tau;
  std::string status = "ok";
};

inline DirectBaseline direct_baseline(const ParameterPoint& pS, const ParameterPoint& pF, double eps,
                                      const IntegratorConfig& cfg) {
  DirectBaseline b;
  try {
    const ProtocolResult r = run_direct(pS, pF, eps, cfg);
    if (r.tau)
      b.tau = r.tau;
    else
      b.status = "timeout";
  } catch (const Error& e) {
    b.status = std::string(to_string(e.kind()));
  }
  return b;
}

inline void fill_cell(GainCell& cell, const ParameterPoint& pS, const ParameterPoint& pF, double kappa,
                      double omega, const DirectBaseline& base, const SweepSpec& spec) {
  cell.axis1 = kappa;
  if (base.tau) cell.tau_dir = *base.tau;
  try {
    const auto nm = is_non_markovian(channel_rates(pS.gamma, pF.gamma), kappa, omega);
    cell.non_markovian = nm.non_markovian;
    cell.f_total = nm.f_total;
  } catch (const Error& e) {
    cell.status = std::string(to_string(e.kind()));
    return;
  }
  if (!base.tau) {
    cell.status = "direct-" + base.status;
    return;
  }
  try {
    const ProtocolResult r = run_continuous(pS, pF, kappa, omega, spec.eps, spec.cfg);
    if (!r.tau) {
      cell.status = "timeout";
      return;
    }
    cell.tau_cpm = *r.tau;
    cell.inconclusive = r.flags.inconclusive;
    cell.gain = gain(*base.tau, *r.tau).g;
  } catch (const Error& e) {
    cell.status = std::string(to_string(e.kind()));
  }
}

inline std::vector<BoundarySample> boundary_curve(const SweepSpec& spec, const std::vector<double>& kappas) {
  std::vector<BoundarySample> out;
  const auto ch = channel_rates(spec.gamma_S, spec.gamma_F);
  for (double k : kappas) out.push_back({k, boundary_omega(ch, k)});
  return out;
}

}  // namespace detail

/// Gain over log-spaced kappa and linear theta, field h = (sin theta, 0, cos theta).
inline GainMap sweep_kappa_theta(const SweepSpec& spec, const SweepProgress& progress = {}) {
  if (spec.kind != SweepKind::KappaTheta) throw Error(ErrorKind::Config, "spec is not a kappa-theta sweep");
  spec.validate();
  GainMap map;
  map.spec = spec;
  map.axis1 = spec.kappa.values();
  map.axis2 = spec.axis2.values();
  const std::size_t n1 = map.axis1.size(), n2 = map.axis2.size();

  // Theta moves both attractors, so each column has its own direct baseline.
  std::vector<detail::DirectBaseline> base(n2);
  detail::parallel_for(n2, spec.jobs, [&](std::size_t j) {
    const FieldVector h = field_from_theta(map.axis2[j]);
    base[j] = detail::direct_baseline({h, spec.gamma_S, PointLabel::S}, {h, spec.gamma_F, PointLabel::F},
                                      spec.eps, spec.cfg);
  });

  map.cells.resize(n1 * n2);
  std::atomic<std::size_t> done{0};
  detail::parallel_for(n1 * n2, spec.jobs, [&](std::size_t idx) {
    const std::size_t i = idx / n2, j = idx % n2;
    const FieldVector h = field_from_theta(map.axis2[j]);
    GainCell& c = map.cells[idx];
    c.axis2 = map.axis2[j];
    detail::fill_cell(c, {h, spec.gamma_S, PointLabel::S}, {h, spec.gamma_F, PointLabel::F}, map.axis1[i],
                      spec.omega, base[j], spec);
    if (progress) progress(done.fetch_add(1) + 1, n1 * n2);
  });
  map.boundary = detail::boundary_curve(spec, map.axis1);
  return map;
}

/// Gain over log-spaced kappa and linear omega at a fixed field.
inline GainMap sweep_kappa_omega(const SweepSpec& spec, const SweepProgress& progress = {}) {
  if (spec.kind != SweepKind::KappaOmega) throw Error(ErrorKind::Config, "spec is not a kappa-omega sweep");
  spec.validate();
  GainMap map;
  map.spec = spec;
  map.axis1 = spec.kappa.values();
  map.axis2 = spec.axis2.values();
  const std::size_t n1 = map.axis1.size(), n2 = map.axis2.size();
  const ParameterPoint pS{spec.field, spec.gamma_S, PointLabel::S};
  const ParameterPoint pF{spec.field, spec.gamma_F, PointLabel::F};
  const detail::DirectBaseline base = detail::direct_baseline(pS, pF, spec.eps, spec.cfg);

  map.cells.resize(n1 * n2);
  std::atomic<std::size_t> done{0};
  detail::parallel_for(n1 * n2, spec.jobs, [&](std::size_t idx) {
    const std::size_t i = idx / n2, j = idx % n2;
    GainCell& c = map.cells[idx];
    c.axis2 = map.axis2[j];
    detail::fill_cell(c, pS, pF, map.axis1[i], map.axis2[j], base, spec);
    if (progress) progress(done.fetch_add(1) + 1, n1 * n2);
  });
  map.boundary = detail::boundary_curve(spec, map.axis1);
  return map;
}

inline GainMap run_sweep(const SweepSpec& spec, const SweepProgress& progress = {}) {
  return spec.kind == SweepKind::KappaTheta ? sweep_kappa_theta(spec, progress) : sweep_kappa_omega(spec, progress);
}

inline void write_gain_map_csv(std::ostream& os, const GainMap& map) {
  os << "axis1,axis2,tau_dir,tau_cpm,gain,inconclusive,non_markovian,f_total,status\n";
  for (const auto& c : map.cells) {
    os << fmt17(c.axis1) << ',' << fmt17(c.axis2) << ',' << fmt17(c.tau_dir) << ',' << fmt17(c.tau_cpm) << ','
       << fmt17(c.gain) << ',' << (c.inconclusive ? 1 : 0) << ',' << (c.non_markovian ? 1 : 0) << ','
       << fmt17(c.f_total) << ',' << c.status << '\n';
  }
}

}  // namespace pontus
