#pragma once

// Affine Bloch-vector dynamics r' = Lambda(t) r + b(t): generator assembly,
// attractors, exact constant-parameter propagation and adaptive integration
// for time-dependent parameters. Two independent routes are provided for
// checking: the density-matrix superoperator and a time-ordered product of
// matrix exponentials.

#include <cmath>
#include <complex>
#include <limits>
#include <ostream>
#include <utility>

#include <Eigen/Dense>

#include "pontus/core.hpp"
#include "pontus/dopri5.hpp"
#include "pontus/expm.hpp"
#include "pontus/format.hpp"

namespace pontus {

struct IntegratorConfig {
  double rel_tol = 1e-9;
  double abs_tol = 1e-10;
  double max_step = 0.5;
  double t_cap = 1e4;
  double sample_stride = 0.05;
  // Integration never stops before this time, even if converged.
  double t_min = 0.0;

  void validate() const {
    if (!(rel_tol > 0.0) || !(abs_tol > 0.0))
      throw Error(ErrorKind::InvalidArgument, "integrator tolerances must be positive");
    if (!(t_cap > 0.0)) throw Error(ErrorKind::InvalidArgument, "t_cap must be positive");
    if (!(sample_stride > 0.0)) throw Error(ErrorKind::InvalidArgument, "sample_stride must be positive");
    if (!(max_step > 0.0)) throw Error(ErrorKind::InvalidArgument, "max_step must be positive");
  }
};

/// Drift matrix and forcing vector for static parameters.
inline AffineGenerator assemble_generator(const ParameterPoint& p) {
  const auto& [hx, hy, hz] = p.h;
  const double gsum = p.gamma.plus + p.gamma.minus;
  const double transverse = -gsum / 4.0 - p.gamma.z;
  AffineGenerator g;
  g.drift << transverse, -hz, hy,
             hz, transverse, -hx,
             -hy, hx, -gsum / 2.0;
  g.drift *= 2.0;
  g.forcing = Vec3(0.0, 0.0, p.gamma.plus - p.gamma.minus);
  return g;
}

inline double condition_number(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m);
  const auto& sv = svd.singularValues();
  if (sv(2) == 0.0) return std::numeric_limits<double>::infinity();
  return sv(0) / sv(2);
}

inline bool is_invertible(const AffineGenerator& g) { return condition_number(g.drift) < 1e12; }

/// Attractor -Lambda^{-1} b as a raw vector; it may leave the ball for
/// generators with negative rates.
inline Vec3 steady_state_vector(const AffineGenerator& g) {
  const double cond = condition_number(g.drift);
  if (!(cond < 1e12))
    throw Error(ErrorKind::SingularGenerator,
                "drift matrix is not invertible (condition number " + fmt17(cond) + ")");
  return -g.drift.partialPivLu().solve(g.forcing);
}

inline BlochVector steady_state(const AffineGenerator& g) { return BlochVector(steady_state_vector(g)); }

inline Vec3 velocity(const AffineGenerator& g, const Vec3& r) { return g.drift * r + g.forcing; }
inline Vec3 velocity(const AffineGenerator& g, const BlochVector& r) { return velocity(g, r.vec()); }

namespace detail {

// exp(t [[L, b], [0, 0]]) = [[exp(tL), int_0^t exp(sL) ds b], [0, 1]]
inline std::pair<Mat3, Vec3> affine_flow(const AffineGenerator& g, double t) {
  Eigen::Matrix4d aug = Eigen::Matrix4d::Zero();
  aug.topLeftCorner<3, 3>() = g.drift * t;
  aug.topRightCorner<3, 1>() = g.forcing * t;
  const Eigen::Matrix4d e = expm<4>(aug);
  return {e.topLeftCorner<3, 3>(), e.topRightCorner<3, 1>()};
}

}  // namespace detail

inline Vec3 propagate_constant(const AffineGenerator& g, const Vec3& r0, double t) {
  if (t < 0.0) throw Error(ErrorKind::InvalidArgument, "propagation time must be nonnegative");
  if (t == 0.0) return r0;
  if (is_invertible(g)) {
    const Vec3 rss = steady_state_vector(g);
    return expm<3>(Mat3(t * g.drift)) * (r0 - rss) + rss;
  }
  const auto [phi, forced] = detail::affine_flow(g, t);
  return phi * r0 + forced;
}

inline BlochVector propagate_constant(const AffineGenerator& g, const BlochVector& r0, double t) {
  return BlochVector(propagate_constant(g, r0.vec(), t));
}

/// Bloch generator obtained from the density-matrix Lindblad equation
/// with H = h.sigma and jump operators sigma_+, sigma_-, sigma_z:
/// Lambda_ij = Tr[sigma_i L(sigma_j)] / 2, b_i = Tr[sigma_i L(1)] / 2.
inline AffineGenerator superoperator_oracle(const ParameterPoint& p) {
  using C = std::complex<double>;
  using M2 = Eigen::Matrix2cd;
  const C i1(0.0, 1.0);
  M2 sx, sy, sz, id;
  sx << 0, 1, 1, 0;
  sy << 0, -i1, i1, 0;
  sz << 1, 0, 0, -1;
  id.setIdentity();
  M2 sp, sm;
  sp << 0, 1, 0, 0;
  sm << 0, 0, 1, 0;

  const M2 H = p.h.x * sx + p.h.y * sy + p.h.z * sz;
  const std::array<std::pair<double, M2>, 3> jumps{
      {{p.gamma.plus, sp}, {p.gamma.minus, sm}, {p.gamma.z, sz}}};

  auto lindblad = [&](const M2& rho) -> M2 {
    M2 out = -i1 * (H * rho - rho * H);
    for (const auto& [rate, L] : jumps) {
      const M2 Ld = L.adjoint();
      out += rate * (L * rho * Ld - 0.5 * (Ld * L * rho + rho * Ld * L));
    }
    return out;
  };

  const std::array<M2, 3> pauli{sx, sy, sz};
  AffineGenerator g;
  for (int j = 0; j < 3; ++j) {
    const M2 lj = lindblad(pauli[j]);
    for (int i = 0; i < 3; ++i) g.drift(i, j) = 0.5 * (pauli[i] * lj).trace().real();
  }
  const M2 l0 = lindblad(id);
  for (int i = 0; i < 3; ++i) g.forcing(i) = 0.5 * (pauli[i] * l0).trace().real();
  return g;
}

/// When integration may stop: after settle_time and t_min, once the
/// distance to the target is below eps/10.
struct StopRule {
  double eps = 1e-4;
  double settle_time = 0.0;
  bool enabled = true;

  bool satisfied(double t, double dist, double t_min) const {
    return enabled && t >= settle_time && t >= t_min && dist < eps / 10.0;
  }
};

/// Adaptive integration of the Bloch equation for the parameter law
/// `schedule(t) -> ParameterPoint`, sampled densely on the stride grid.
template <class Schedule>
Trajectory integrate(Schedule&& schedule, const BlochVector& r0, const BlochVector& target,
                     const IntegratorConfig& cfg, const StopRule& stop = {}) {
  cfg.validate();
  Trajectory traj;
  traj.target = target;
  traj.epsilon = stop.eps;
  traj.samples.reserve(static_cast<std::size_t>(std::min(cfg.t_cap / cfg.sample_stride, 4e5)) + 2);

  auto rhs = [&](double t, const Vec3& r) -> Vec3 {
    return velocity(assemble_generator(schedule(t)), r);
  };
  auto guard = [](double t, Vec3& r) {
    const double n = r.norm();
    if (!std::isfinite(n)) throw Error(ErrorKind::NonFinite, "state diverged at t = " + fmt17(t));
    if (n > 1.0 + kBallTolerance)
      throw Error(ErrorKind::BallViolation, "|r| = " + fmt17(n) + " at t = " + fmt17(t));
    if (n > 1.0) r /= n;
  };
  auto on_sample = [&](double t, const Vec3& r, const Vec3& dr) {
    Sample s;
    s.t = t;
    s.r = BlochVector(r);
    s.rates = schedule(t).gamma;
    s.dist = trace_distance(s.r, target);
    s.v_left = dr;
    s.v_right = dr;
    traj.samples.push_back(s);
    return stop.satisfied(t, s.dist, cfg.t_min);
  };

  DopriControls ctl;
  ctl.rel_tol = cfg.rel_tol;
  ctl.abs_tol = cfg.abs_tol;
  ctl.max_step = cfg.max_step;
  ctl.t_end = cfg.t_cap;
  ctl.stride = cfg.sample_stride;
  const DopriStats st = dopri5<3>(rhs, 0.0, r0.vec(), ctl, guard, on_sample);

  traj.flags.converged = st.stopped;
  traj.flags.timed_out = !st.stopped;
  return traj;
}

/// Time-ordered product of per-step affine flows using midpoint parameters;
/// second order in the step size.
template <class Schedule>
Vec3 product_integration_oracle(Schedule&& schedule, const Vec3& r0, double t, int n_steps) {
  if (n_steps < 1) throw Error(ErrorKind::InvalidArgument, "n_steps must be at least 1");
  if (t == 0.0) return r0;
  const double h = t / n_steps;
  Vec3 r = r0;
  for (int k = 0; k < n_steps; ++k) {
    const auto [phi, forced] = detail::affine_flow(assemble_generator(schedule((k + 0.5) * h)), h);
    r = phi * r + forced;
  }
  return r;
}

inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  os << "t,rx,ry,rz,dist,gp,gm,gz\n";
  for (const auto& s : traj.samples) {
    os << fmt17(s.t) << ',' << fmt17(s.r.x()) << ',' << fmt17(s.r.y()) << ',' << fmt17(s.r.z())
       << ',' << fmt17(s.dist) << ',' << fmt17(s.rates.plus) << ',' << fmt17(s.rates.minus) << ','
       << fmt17(s.rates.z) << '\n';
  }
}

struct VelocitySample {
  Vec3 r;
  Vec3 v;
};

/// Velocity field on a cubic grid of the given spacing, restricted to |r| <= radius.
inline std::vector<VelocitySample> velocity_field(const AffineGenerator& g, double spacing,
                                                  double radius = 1.0) {
  if (!(spacing > 0.0) || !(radius > 0.0) || radius > 1.0)
    throw Error(ErrorKind::InvalidArgument, "velocity grid needs spacing > 0 and 0 < radius <= 1");
  const int n = static_cast<int>(std::floor(radius / spacing + 1e-9));
  std::vector<VelocitySample> out;
  for (int i = -n; i <= n; ++i)
    for (int j = -n; j <= n; ++j)
      for (int k = -n; k <= n; ++k) {
        const Vec3 r(i * spacing, j * spacing, k * spacing);
        if (r.norm() > radius + 1e-12) continue;
        out.push_back({r, velocity(g, r)});
      }
  return out;
}

inline void write_velocity_csv(std::ostream& os, const std::vector<VelocitySample>& field) {
  os << "rx,ry,rz,vx,vy,vz,speed\n";
  for (const auto& s : field) {
    os << fmt17(s.r.x()) << ',' << fmt17(s.r.y()) << ',' << fmt17(s.r.z()) << ',' << fmt17(s.v.x())
       << ',' << fmt17(s.v.y()) << ',' << fmt17(s.v.z()) << ',' << fmt17(s.v.norm()) << '\n';
  }
}

}  // namespace pontus
