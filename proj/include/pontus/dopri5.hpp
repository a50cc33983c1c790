#pragma once

// Embedded Runge-Kutta pair of orders 5(4) (Dormand & Prince) with the
// fourth-order continuous extension of Hairer, Norsett & Wanner.
// Observers receive the dense solution on a uniform output grid.

#include <algorithm>
#include <cmath>
#include <cstdint>

#include <Eigen/Dense>

#include "pontus/core.hpp"

namespace pontus {

struct DopriControls {
  double rel_tol = 1e-9;
  double abs_tol = 1e-10;
  double max_step = 0.5;
  double t_end = 1e4;
  double stride = 0.05;
};

struct DopriStats {
  std::int64_t accepted = 0;
  std::int64_t rejected = 0;
  std::int64_t rhs_evals = 0;
  double t_final = 0.0;
  bool stopped = false;
};

namespace detail {

template <int N>
double error_norm(const Eigen::Matrix<double, N, 1>& err, const Eigen::Matrix<double, N, 1>& y0,
                  const Eigen::Matrix<double, N, 1>& y1, double atol, double rtol) {
  double acc = 0.0;
  for (int i = 0; i < y0.size(); ++i) {
    const double sc = atol + rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
    acc += (err[i] / sc) * (err[i] / sc);
  }
  return std::sqrt(acc / static_cast<double>(y0.size()));
}

}  // namespace detail

/// Integrates y' = rhs(t, y) from t0 until ctl.t_end or until the sample
/// observer returns true.
///
/// `post_step(t, y&)` runs after every accepted step and may project y.
/// `on_sample(t, y, dy) -> bool` is called at t0 + k*stride, in order.
template <int N, class Rhs, class PostStep, class OnSample>
DopriStats dopri5(Rhs&& rhs, double t0, Eigen::Matrix<double, N, 1> y, const DopriControls& ctl,
                  PostStep&& post_step, OnSample&& on_sample) {
  using V = Eigen::Matrix<double, N, 1>;

  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                          a75 = -2187.0 / 6784, a76 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
  static constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                          d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                          d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

  DopriStats stats;
  double t = t0;
  V k1 = rhs(t, y);
  ++stats.rhs_evals;

  if (on_sample(t, y, k1)) {
    stats.stopped = true;
    stats.t_final = t;
    return stats;
  }

  // Initial step guess (Hairer's hinit).
  double h;
  {
    const V sc = (ctl.abs_tol + ctl.rel_tol * y.array().abs()).matrix();
    const double d0 = std::sqrt((y.array() / sc.array()).square().mean());
    const double d1n = std::sqrt((k1.array() / sc.array()).square().mean());
    double h0 = (d0 < 1e-5 || d1n < 1e-5) ? 1e-6 : 0.01 * d0 / d1n;
    h0 = std::min(h0, ctl.max_step);
    const V y1 = y + h0 * k1;
    const V f1 = rhs(t + h0, y1);
    ++stats.rhs_evals;
    const double d2 = std::sqrt(((f1 - k1).array() / sc.array()).square().mean()) / h0;
    const double dm = std::max(d1n, d2);
    const double h1 = dm <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dm, 1.0 / 5.0);
    h = std::min({100 * h0, h1, ctl.max_step});
  }

  std::int64_t next_k = 1;
  double fac_old = 1e-4;
  bool last_rejected = false;

  while (t < ctl.t_end) {
    if (t + h > ctl.t_end) h = ctl.t_end - t;
    if (!(h >= 1e-14 * std::max(1.0, std::abs(t))))
      throw Error(ErrorKind::StepSizeUnderflow, "step size underflow at t = " + std::to_string(t));

    const V k2 = rhs(t + c2 * h, y + h * (a21 * k1));
    const V k3 = rhs(t + c3 * h, y + h * (a31 * k1 + a32 * k2));
    const V k4 = rhs(t + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
    const V k5 = rhs(t + c5 * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const V k6 = rhs(t + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    const V y_new = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
    const V k7 = rhs(t + h, y_new);
    stats.rhs_evals += 6;

    const V err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    const double en = detail::error_norm<N>(err, y, y_new, ctl.abs_tol, ctl.rel_tol);
    if (!std::isfinite(en)) {
      h *= 0.2;
      last_rejected = true;
      ++stats.rejected;
      continue;
    }

    if (en <= 1.0) {
      // Dense-output coefficients for this step.
      const V r1 = y;
      const V ydiff = y_new - y;
      const V bspl = h * k1 - ydiff;
      const V r4 = ydiff - h * k7 - bspl;
      const V r5 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);

      const double t_new = t + h;
      bool stop = false;
      for (;;) {
        const double ts = t0 + static_cast<double>(next_k) * ctl.stride;
        if (ts > t_new * (1.0 + 1e-15) + 1e-15) break;
        const double th = std::clamp((ts - t) / h, 0.0, 1.0);
        const double th1 = 1.0 - th;
        V ys = r1 + th * (ydiff + th1 * (bspl + th * (r4 + th1 * r5)));
        post_step(ts, ys);
        const V dys = rhs(ts, ys);
        ++stats.rhs_evals;
        ++next_k;
        if (on_sample(ts, ys, dys)) {
          stop = true;
          stats.t_final = ts;
          break;
        }
      }

      t = t_new;
      y = y_new;
      post_step(t, y);
      k1 = rhs(t, y);  // FSAL would reuse k7; recomputed because post_step may project y
      ++stats.rhs_evals;
      ++stats.accepted;
      if (stop) {
        stats.stopped = true;
        return stats;
      }

      // PI step-size controller (Hairer's dopri5 defaults).
      const double expo1 = 0.2 - 0.04;
      double fac11 = std::pow(std::max(en, 1e-16), expo1);
      double fac = fac11 / std::pow(fac_old, 0.04) / 0.9;
      fac = std::clamp(fac, 1.0 / 10.0, 1.0 / 0.2);
      fac_old = std::max(en, 1e-4);
      double h_new = h / fac;
      if (last_rejected) h_new = std::min(h_new, h);
      h = std::min(h_new, ctl.max_step);
      last_rejected = false;
    } else {
      const double fac11 = std::pow(en, 0.2 - 0.04);
      h = h / std::min(1.0 / 0.2, fac11 / 0.9);
      last_rejected = true;
      ++stats.rejected;
    }
  }
  stats.t_final = t;
  return stats;
}

}  // namespace pontus
