#pragma once

// Speed-up classification: gain of an engineered protocol over the direct
// quench, two-step effect types, and weak/strong continuous effects.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pontus/core.hpp"
#include "pontus/protocols.hpp"

namespace pontus {

inline constexpr double kSeparationTolerance = 1e-6;
inline constexpr double kCrossingTolerance = 1e-8;

enum class TwoStepClass { WeakTypeA, WeakTypeB, Strong, NoEffect };
enum class ContinuousClass { Weak, Strong, NoEffect, Inconclusive };

constexpr std::string_view to_string(TwoStepClass c) {
  switch (c) {
    case TwoStepClass::WeakTypeA: return "weak-type-A";
    case TwoStepClass::WeakTypeB: return "weak-type-B";
    case TwoStepClass::Strong: return "strong";
    case TwoStepClass::NoEffect: return "no-effect";
  }
  return "?";
}

constexpr std::string_view to_string(ContinuousClass c) {
  switch (c) {
    case ContinuousClass::Weak: return "weak";
    case ContinuousClass::Strong: return "strong";
    case ContinuousClass::NoEffect: return "no-effect";
    case ContinuousClass::Inconclusive: return "inconclusive";
  }
  return "?";
}

struct GainValue {
  double g = 0.0;
  double tau_dir = 0.0;
  double tau_cpm = 0.0;
};

/// g = tau_dir / tau_cpm - 1. An infinite tau_cpm gives -1.
inline GainValue gain(double tau_dir, double tau_cpm) {
  if (!(tau_dir >= 0.0) || !(tau_cpm >= 0.0))
    throw Error(ErrorKind::InvalidArgument, "relaxation times must be nonnegative");
  if (tau_cpm == 0.0) {
    if (tau_dir > 0.0) throw Error(ErrorKind::ZeroDenominator, "engineered relaxation time is zero");
    return {0.0, tau_dir, tau_cpm};
  }
  if (std::isinf(tau_cpm)) return {-1.0, tau_dir, tau_cpm};
  return {tau_dir / tau_cpm - 1.0, tau_dir, tau_cpm};
}

struct TwoStepDistances {
  double d_S = 0.0;   // D(rho_S, rho_F)
  double d_I = 0.0;   // D(rho_I, rho_F)
  double d_SF = 0.0;  // D(rho_SF(t_I), rho_F)
};

inline TwoStepDistances two_step_distances(const TwoStepGeometry& g) {
  return {trace_distance(g.r_S, g.r_F), trace_distance(g.r_I, g.r_F),
          trace_distance(g.r_direct_at_switch, g.r_F)};
}

/// Classification from the three distances and the speed-up predicate.
inline TwoStepClass classify_two_step(const TwoStepDistances& d, bool faster) {
  if (!faster) return TwoStepClass::NoEffect;
  if (d.d_I < d.d_SF) return TwoStepClass::WeakTypeA;
  if (d.d_I < d.d_S) return TwoStepClass::WeakTypeB;
  return TwoStepClass::Strong;
}

inline TwoStepClass classify_two_step(const ProtocolResult& two_step, const ProtocolResult& direct) {
  if (two_step.kind != ProtocolKind::TwoStep || !two_step.geometry)
    throw Error(ErrorKind::InvalidArgument, "first argument must be a two-step result");
  if (!two_step.tau || !direct.tau)
    throw Error(ErrorKind::NotConverged, "both protocols must converge before classification");
  return classify_two_step(two_step_distances(*two_step.geometry), *two_step.tau < *direct.tau);
}

/// Sign changes of a - b, with a hysteresis band of width tol around zero.
inline int count_crossings(std::span<const double> a, std::span<const double> b,
                           double tol = kCrossingTolerance) {
  const std::size_t n = std::min(a.size(), b.size());
  int sign = 0;
  int crossings = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    if (std::abs(d) <= tol) continue;
    const int s = d > 0 ? 1 : -1;
    if (sign != 0 && s != sign) ++crossings;
    sign = s;
  }
  return crossings;
}

struct ContinuousReport {
  ContinuousClass cls = ContinuousClass::NoEffect;
  std::optional<GainValue> gain;
  int crossings = 0;
  std::vector<double> crossing_times;
  bool parity_consistent = true;
  std::vector<std::string> diagnostics;
};

namespace detail {

// Distance series of both runs on their shared sample grid, cut at `t_end`.
inline void shared_series(const Trajectory& a, const Trajectory& b, double t_end,
                          std::vector<double>& t, std::vector<double>& da, std::vector<double>& db) {
  const std::size_t n = std::min(a.samples.size(), b.samples.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(a.samples[i].t - b.samples[i].t) > 1e-9) break;
    if (a.samples[i].t > t_end) break;
    t.push_back(a.samples[i].t);
    da.push_back(a.samples[i].dist);
    db.push_back(b.samples[i].dist);
  }
}

}  // namespace detail

/// Full comparison of a continuous run against the direct quench.
/// Crossings are counted up to the later of the two relaxation times; once
/// both curves are inside the epsilon ball their ordering is not resolvable.
inline ContinuousReport compare_continuous(const ProtocolResult& cpm, const ProtocolResult& direct) {
  if (!cpm.tau || !direct.tau)
    throw Error(ErrorKind::NotConverged, "both protocols must converge before classification");
  ContinuousReport rep;
  rep.gain = gain(*direct.tau, *cpm.tau);

  const double window = std::max(*cpm.tau, *direct.tau);
  std::vector<double> t, dc, dd;
  detail::shared_series(cpm.trajectory, direct.trajectory, window, t, dc, dd);
  rep.crossings = count_crossings(dc, dd);
  {
    int sign = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double d = dc[i] - dd[i];
      if (std::abs(d) <= kCrossingTolerance) continue;
      const int s = d > 0 ? 1 : -1;
      if (sign != 0 && s != sign) rep.crossing_times.push_back(0.5 * (t[i - 1] + t[i]));
      sign = s;
    }
  }
  if (t.empty() || t.back() < window - 1e-9)
    rep.diagnostics.push_back("shared sample grid ends before the comparison window");

  if (cpm.flags.inconclusive) {
    rep.cls = ContinuousClass::Inconclusive;
    return rep;
  }
  if (*cpm.tau >= *direct.tau) {
    rep.cls = ContinuousClass::NoEffect;
    return rep;
  }
  // First point where the two curves separate decides which one leads.
  std::optional<int> lead;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double d = dc[i] - dd[i];
    if (std::abs(d) > kSeparationTolerance) {
      lead = d < 0 ? -1 : 1;
      break;
    }
  }
  if (!lead) {
    rep.cls = ContinuousClass::NoEffect;
    rep.diagnostics.push_back("curves never separate by more than the separation tolerance");
    return rep;
  }
  rep.cls = *lead < 0 ? ContinuousClass::Weak : ContinuousClass::Strong;
  const bool even = rep.crossings % 2 == 0;
  rep.parity_consistent = (rep.cls == ContinuousClass::Weak) == even;
  if (!rep.parity_consistent)
    rep.diagnostics.push_back(std::string(to_string(rep.cls)) + " effect with " +
                              std::to_string(rep.crossings) + " crossings violates the parity rule");
  return rep;
}

inline ContinuousClass classify_continuous(const ProtocolResult& cpm, const ProtocolResult& direct) {
  return compare_continuous(cpm, direct).cls;
}

struct TwoStepScanEntry {
  double t_I = 0.0;
  std::optional<double> tau;
  TwoStepClass cls = TwoStepClass::NoEffect;
  TwoStepDistances distances;
};

/// Two-step runs over t_I = lo, lo + step, ... <= hi.
inline std::vector<TwoStepScanEntry> scan_two_step(const ParameterPoint& pS, const ParameterPoint& pA,
                                                   const ParameterPoint& pF, double lo, double hi,
                                                   double step, double eps = kDefaultEpsilon,
                                                   const IntegratorConfig& cfg = {}) {
  if (!(step > 0.0) || !(lo > 0.0) || hi < lo)
    throw Error(ErrorKind::InvalidArgument, "scan needs 0 < lo <= hi and step > 0");
  const ProtocolResult direct = run_direct(pS, pF, eps, cfg);
  if (!direct.tau) throw Error(ErrorKind::NotConverged, "direct protocol did not converge");
  std::vector<TwoStepScanEntry> out;
  const auto n = static_cast<std::int64_t>(std::floor((hi - lo) / step + 1e-9));
  for (std::int64_t k = 0; k <= n; ++k) {
    const double tI = lo + static_cast<double>(k) * step;
    ProtocolResult r = run_two_step(pS, pA, pF, tI, eps, cfg);
    TwoStepScanEntry e;
    e.t_I = tI;
    e.tau = r.tau;
    e.distances = two_step_distances(*r.geometry);
    if (r.tau) e.cls = classify_two_step(e.distances, *r.tau < *direct.tau);
    out.push_back(e);
  }
  return out;
}

}  // namespace pontus
