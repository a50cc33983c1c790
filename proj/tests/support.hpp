#pragma once

// Independent reference computations shared by the test suites. None of
// these call into the library's numerical kernels.

#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <random>

#include <Eigen/Dense>

#include "pontus/core.hpp"

namespace oracle {

using pontus::Mat3;
using pontus::Vec3;

inline std::mt19937_64& rng() {
  static std::mt19937_64 gen(20240611);
  return gen;
}

inline double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng()); }

inline Vec3 random_in_ball(double radius = 1.0) {
  for (;;) {
    const Vec3 v(uniform(-1, 1), uniform(-1, 1), uniform(-1, 1));
    if (v.norm() <= 1.0) return radius * v;
  }
}

inline pontus::ParameterPoint random_point(double h_max = 2.0, double g_max = 1.0) {
  pontus::ParameterPoint p;
  p.h = {uniform(-h_max, h_max), uniform(-h_max, h_max), uniform(-h_max, h_max)};
  p.gamma = {uniform(0, g_max), uniform(0, g_max), uniform(0, g_max)};
  return p;
}

/// Gaussian elimination with partial pivoting on a 3x3 system.
inline Vec3 gauss_solve(Mat3 a, Vec3 b) {
  for (int c = 0; c < 3; ++c) {
    int piv = c;
    for (int r = c + 1; r < 3; ++r)
      if (std::abs(a(r, c)) > std::abs(a(piv, c))) piv = r;
    a.row(c).swap(a.row(piv));
    std::swap(b(c), b(piv));
    for (int r = c + 1; r < 3; ++r) {
      const double f = a(r, c) / a(c, c);
      a.row(r) -= f * a.row(c);
      b(r) -= f * b(c);
    }
  }
  Vec3 x;
  for (int r = 2; r >= 0; --r) {
    double s = b(r);
    for (int c = r + 1; c < 3; ++c) s -= a(r, c) * x(c);
    x(r) = s / a(r, r);
  }
  return x;
}

/// Drift and forcing written out entry by entry from the Bloch equations.
inline std::pair<Mat3, Vec3> bloch_generator(const pontus::ParameterPoint& p) {
  const double gp = p.gamma.plus, gm = p.gamma.minus, gz = p.gamma.z;
  const double hx = p.h.x, hy = p.h.y, hz = p.h.z;
  const double t = -(gp + gm) / 2.0 - 2.0 * gz;
  Mat3 m;
  m << t, -2 * hz, 2 * hy, 2 * hz, t, -2 * hx, -2 * hy, 2 * hx, -(gp + gm);
  return {m, Vec3(0, 0, gp - gm)};
}

/// Trace distance from the eigenvalues of rho1 - rho2 as 2x2 density matrices.
inline double density_trace_distance(const Vec3& r1, const Vec3& r2) {
  using C = std::complex<double>;
  auto rho = [](const Vec3& r) {
    Eigen::Matrix2cd m;
    m << C(1 + r.z(), 0), C(r.x(), -r.y()), C(r.x(), r.y()), C(1 - r.z(), 0);
    return Eigen::Matrix2cd(0.5 * m);
  };
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(rho(r1) - rho(r2));
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

/// Composite Simpson rule with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n) {
  if (n % 2) ++n;
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

/// Sign changes of f on a uniform grid, refined by bisection.
inline std::vector<double> sign_scan_roots(const std::function<double(double)>& f, double a, double b, int n) {
  std::vector<double> roots;
  double x0 = a, f0 = f(a);
  for (int i = 1; i <= n; ++i) {
    const double x1 = a + (b - a) * i / n, f1 = f(x1);
    if ((f0 < 0) != (f1 < 0)) {
      double lo = x0, hi = x1;
      for (int k = 0; k < 100; ++k) {
        const double m = 0.5 * (lo + hi);
        ((f(m) < 0) == (f0 < 0) ? lo : hi) = m;
      }
      roots.push_back(0.5 * (lo + hi));
    }
    x0 = x1;
    f0 = f1;
  }
  return roots;
}

}  // namespace oracle
