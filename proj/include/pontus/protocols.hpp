#pragma once

// State-preparation protocols toward a final attractor F, starting from the
// attractor of S: sudden quench (direct), quench through an auxiliary
// attractor A (two-step), and smooth exponential-cosine rate modulation
// (continuous). Relaxation times use the epsilon cutoff on the trace
// distance to F.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string_view>
#include <vector>

#include "pontus/core.hpp"
#include "pontus/dynamics.hpp"
#include "pontus/schedule.hpp"

namespace pontus {

inline constexpr double kDefaultEpsilon = 1e-4;

enum class ProtocolKind { Direct, TwoStep, Continuous };

constexpr std::string_view to_string(ProtocolKind k) {
  switch (k) {
    case ProtocolKind::Direct: return "direct";
    case ProtocolKind::TwoStep: return "two-step";
    case ProtocolKind::Continuous: return "continuous";
  }
  return "?";
}

/// Positions relevant for classifying a two-step run.
struct TwoStepGeometry {
  Vec3 r_S;
  Vec3 r_A;
  Vec3 r_F;
  Vec3 r_I;               // two-step state at the switch time
  Vec3 r_direct_at_switch; // direct-protocol state at the switch time
  double t_I = 0.0;
};

struct ProtocolResult {
  ProtocolKind kind = ProtocolKind::Direct;
  Trajectory trajectory;
  std::optional<double> tau;
  TrajectoryFlags flags;
  double epsilon = kDefaultEpsilon;
  ParameterPoint pS;
  ParameterPoint pF;
  std::optional<ParameterPoint> pA;
  double t_I = 0.0;
  double kappa = 0.0;
  double omega = 0.0;
  std::optional<TwoStepGeometry> geometry;
};

struct RelaxationTime {
  std::optional<double> tau;
  bool inconclusive = false;
  int down_crossings = 0;
  std::optional<double> first_down;
};

namespace detail {

// Cubic Hermite interpolation of the Bloch vector between two samples.
inline Vec3 hermite(const Sample& a, const Sample& b, double t) {
  const double h = b.t - a.t;
  const double s = (t - a.t) / h;
  const double s2 = s * s, s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * a.r.vec() + (s3 - 2 * s2 + s) * h * a.v_right +
         (-2 * s3 + 3 * s2) * b.r.vec() + (s3 - s2) * h * b.v_left;
}

inline double dist_between(const Sample& a, const Sample& b, double t, const Vec3& target) {
  return trace_distance(hermite(a, b, t), target);
}

// Root of dist(t) = eps inside [a.t, b.t]; dist changes side across the interval.
inline double locate_crossing(const Sample& a, const Sample& b, const Vec3& target, double eps,
                              double lo, double hi) {
  const bool lo_above = dist_between(a, b, lo, target) >= eps;
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    if ((dist_between(a, b, mid, target) >= eps) == lo_above)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

/// Last downward crossing of the epsilon level. The run is inconclusive when
/// the distance first reaches epsilon while the rate modulation is still
/// oscillating (before traj.transient_end); later re-crossings come from the
/// field-driven spiral, which the direct quench shares.
inline RelaxationTime relaxation_time(const Trajectory& traj, double eps) {
  if (!traj.flags.converged || traj.samples.empty())
    throw Error(ErrorKind::NotConverged, "trajectory did not satisfy the convergence predicate");
  const auto& s = traj.samples;
  const Vec3& target = traj.target.vec();
  RelaxationTime out;

  if (s.back().dist >= eps)
    throw Error(ErrorKind::NotConverged, "trace distance still above epsilon at the last sample");
  if (std::none_of(s.begin(), s.end(), [eps](const Sample& x) { return x.dist >= eps; })) {
    out.tau = 0.0;
    return out;
  }

  auto above = [eps](double d) { return d >= eps; };
  const std::size_t n = s.size();
  std::vector<char> flips(n, 0);
  for (std::size_t i = 0; i + 1 < n; ++i) flips[i] = above(s[i].dist) != above(s[i + 1].dist);

  double last_down = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    // Near a level change the interval is rescanned at a finer stride so that
    // double crossings inside one stride are not merged.
    const bool near_flip = flips[i] || (i > 0 && flips[i - 1]) || (i + 2 < n && flips[i + 1]);
    if (!near_flip) continue;
    const int sub = (i > 0 && flips[i - 1]) || (i + 2 < n && flips[i + 1]) ? 8 : 1;
    const double a = s[i].t, b = s[i + 1].t;
    double prev_t = a;
    double prev_d = s[i].dist;
    for (int k = 1; k <= sub; ++k) {
      const double tk = k == sub ? b : a + (b - a) * k / sub;
      const double dk = k == sub ? s[i + 1].dist : detail::dist_between(s[i], s[i + 1], tk, target);
      if (above(prev_d) && !above(dk)) {
        ++out.down_crossings;
        last_down = detail::locate_crossing(s[i], s[i + 1], target, eps, prev_t, tk);
        if (!out.first_down) out.first_down = last_down;
      }
      prev_t = tk;
      prev_d = dk;
    }
  }
  out.tau = last_down;
  out.inconclusive = traj.transient_end > 0.0 && out.first_down && *out.first_down < traj.transient_end;
  return out;
}

namespace detail {

inline void finish(ProtocolResult& res) {
  res.flags = res.trajectory.flags;
  if (res.flags.converged) {
    const RelaxationTime rt = relaxation_time(res.trajectory, res.epsilon);
    res.tau = rt.tau;
    res.flags.inconclusive = rt.inconclusive;
    res.trajectory.tau = rt.tau;
    res.trajectory.flags.inconclusive = rt.inconclusive;
  }
}

inline Sample exact_sample(double t, const Vec3& r, const AffineGenerator& g, const RateTriple& rates,
                           const Vec3& target) {
  Sample s;
  s.t = t;
  s.r = BlochVector(r);
  s.rates = rates;
  s.dist = trace_distance(s.r.vec(), target);
  s.v_left = velocity(g, s.r);
  s.v_right = s.v_left;
  return s;
}

}  // namespace detail

/// Sudden quench S -> F, propagated exactly on the sample grid.
inline ProtocolResult run_direct(const ParameterPoint& pS, const ParameterPoint& pF,
                                 double eps = kDefaultEpsilon, const IntegratorConfig& cfg = {}) {
  if (!(eps > 0.0)) throw Error(ErrorKind::InvalidArgument, "epsilon must be positive");
  cfg.validate();
  validate_endpoint(pS);
  validate_endpoint(pF);
  const AffineGenerator gF = assemble_generator(pF);
  const Vec3 rS = steady_state(assemble_generator(pS)).vec();
  const Vec3 rF = steady_state(gF).vec();

  ProtocolResult res;
  res.kind = ProtocolKind::Direct;
  res.epsilon = eps;
  res.pS = pS;
  res.pF = pF;
  res.trajectory.target = BlochVector(rF);
  res.trajectory.epsilon = eps;

  const StopRule stop{eps, 0.0, true};
  const Vec3 delta0 = rS - rF;
  for (std::int64_t k = 0;; ++k) {
    const double t = static_cast<double>(k) * cfg.sample_stride;
    if (t > cfg.t_cap) {
      res.trajectory.flags.timed_out = true;
      break;
    }
    const Vec3 r = k == 0 ? rS : Vec3(expm<3>(Mat3(t * gF.drift)) * delta0 + rF);
    res.trajectory.samples.push_back(detail::exact_sample(t, r, gF, pF.gamma, rF));
    if (stop.satisfied(t, res.trajectory.samples.back().dist, cfg.t_min)) {
      res.trajectory.flags.converged = true;
      break;
    }
  }
  detail::finish(res);
  return res;
}

/// S -> A on (0, t_I], then A -> F, with exact constant-generator propagation.
inline ProtocolResult run_two_step(const ParameterPoint& pS, const ParameterPoint& pA,
                                   const ParameterPoint& pF, double t_I,
                                   double eps = kDefaultEpsilon, const IntegratorConfig& cfg = {}) {
  if (!(t_I > 0.0)) throw Error(ErrorKind::InvalidArgument, "switch time must be positive");
  if (!(eps > 0.0)) throw Error(ErrorKind::InvalidArgument, "epsilon must be positive");
  cfg.validate();
  validate_endpoint(pS);
  validate_endpoint(pA);
  validate_endpoint(pF);
  const AffineGenerator gA = assemble_generator(pA);
  const AffineGenerator gF = assemble_generator(pF);
  const Vec3 rS = steady_state(assemble_generator(pS)).vec();
  const Vec3 rA = steady_state(gA).vec();
  const Vec3 rF = steady_state(gF).vec();
  const Vec3 rI = expm<3>(Mat3(t_I * gA.drift)) * (rS - rA) + rA;

  ProtocolResult res;
  res.kind = ProtocolKind::TwoStep;
  res.epsilon = eps;
  res.pS = pS;
  res.pA = pA;
  res.pF = pF;
  res.t_I = t_I;
  res.geometry = TwoStepGeometry{rS, rA, rF, rI, propagate_constant(gF, rS, t_I), t_I};
  res.trajectory.target = BlochVector(rF);
  res.trajectory.epsilon = eps;

  const StopRule stop{eps, t_I, true};
  auto& samples = res.trajectory.samples;
  bool switch_recorded = false;
  for (std::int64_t k = 0;; ++k) {
    const double t = static_cast<double>(k) * cfg.sample_stride;
    if (!switch_recorded && t >= t_I - 1e-12) {
      Sample s = detail::exact_sample(t_I, rI, gF, pA.gamma, rF);
      s.v_left = velocity(gA, s.r);
      samples.push_back(s);
      switch_recorded = true;
      if (std::abs(t - t_I) <= 1e-12) continue;
    }
    if (t > cfg.t_cap) {
      res.trajectory.flags.timed_out = true;
      break;
    }
    if (t < t_I) {
      const Vec3 r = k == 0 ? rS : Vec3(expm<3>(Mat3(t * gA.drift)) * (rS - rA) + rA);
      samples.push_back(detail::exact_sample(t, r, gA, pA.gamma, rF));
    } else {
      const Vec3 r = expm<3>(Mat3((t - t_I) * gF.drift)) * (rI - rF) + rF;
      samples.push_back(detail::exact_sample(t, r, gF, pF.gamma, rF));
    }
    if (stop.satisfied(t, samples.back().dist, cfg.t_min)) {
      res.trajectory.flags.converged = true;
      break;
    }
  }
  detail::finish(res);
  return res;
}

/// Rates follow the exponential-cosine law from S to F under a static field.
inline ProtocolResult run_continuous(const ParameterPoint& pS, const ParameterPoint& pF, double kappa,
                                     double omega, double eps = kDefaultEpsilon,
                                     const IntegratorConfig& cfg = {}) {
  if (!(eps > 0.0)) throw Error(ErrorKind::InvalidArgument, "epsilon must be positive");
  if (!(pS.h == pF.h))
    throw Error(ErrorKind::InvalidArgument, "continuous protocol requires a static field (h_S == h_F)");
  validate_endpoint(pS);
  validate_endpoint(pF);
  const RateSchedule sched = make_exponential_cosine(pS.gamma, pF.gamma, pS.h, kappa, omega);
  const auto& law = std::get<ExponentialCosineSchedule>(sched);
  const Vec3 rS = steady_state(assemble_generator(pS)).vec();
  const Vec3 rF = steady_state(assemble_generator(pF)).vec();

  ProtocolResult res;
  res.kind = ProtocolKind::Continuous;
  res.epsilon = eps;
  res.pS = pS;
  res.pF = pF;
  res.kappa = kappa;
  res.omega = omega;

  const double settle = settle_time(sched, eps);
  const StopRule stop{eps, settle, true};
  res.trajectory = integrate([&law](double t) { return ParameterPoint{law.h, rate_at(law, t), PointLabel::Custom}; },
                             BlochVector(rS), BlochVector(rF), cfg, stop);
  res.trajectory.transient_end = omega > 0.0 ? settle : 0.0;
  detail::finish(res);
  return res;
}

}  // namespace pontus
