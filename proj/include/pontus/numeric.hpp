#pragma once

// Small numerical kernels: bracketed bisection and adaptive Gauss-Kronrod
// quadrature with an absolute tolerance.

#include <cmath>
#include <utility>

#include "pontus/core.hpp"

namespace pontus {

/// Root of f in [lo, hi]; f(lo) and f(hi) must not share a strict sign.
template <class F>
double bisect(F&& f, double lo, double hi, double tol = 1e-12) {
  double flo = f(lo);
  const double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0) == (fhi > 0)) throw Error(ErrorKind::NoSolution, "bisection bracket has no sign change");
  for (int it = 0; it < 200 && hi - lo > tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm > 0) == (flo > 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

namespace detail {

inline constexpr double kXgk[8] = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                                   0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                                   0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                                   0.207784955007898467600689403773245, 0.0};
inline constexpr double kWgk[8] = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                                   0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                                   0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                                   0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double kWg[4] = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                                  0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <class F>
std::pair<double, double> gauss_kronrod15(F& f, double a, double b) {
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  const double fc = f(c);
  double k = fc * kWgk[7];
  double g = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double x = h * kXgk[j];
    const double s = f(c - x) + f(c + x);
    k += kWgk[j] * s;
    if (j % 2 == 1) g += kWg[j / 2] * s;
  }
  return {k * h, std::abs((k - g) * h)};
}

// A panel is accepted only if its Kronrod error estimate is small and the two
// half panels agree with it; either test alone can miss a feature narrower
// than the node spacing.
template <class F>
double adaptive_gk(F& f, double a, double b, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const auto [left, el] = gauss_kronrod15(f, a, m);
  const auto [right, er] = gauss_kronrod15(f, m, b);
  if (depth <= 0 || (el + er <= tol && std::abs(left + right - whole) <= tol)) return left + right;
  return adaptive_gk(f, a, m, left, 0.5 * tol, depth - 1) + adaptive_gk(f, m, b, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

/// Integral of f over [a, b] to absolute tolerance `tol`, splitting first into
/// pieces no longer than `chunk`.
template <class F>
double integrate_adaptive(F&& f, double a, double b, double tol, double chunk = 1.0) {
  if (b <= a) return 0.0;
  const auto n = static_cast<long>(std::ceil((b - a) / chunk));
  const double w = (b - a) / static_cast<double>(n);
  double sum = 0.0;
  for (long i = 0; i < n; ++i) {
    const double lo = a + w * static_cast<double>(i);
    const double hi = i + 1 == n ? b : lo + w;
    sum += detail::adaptive_gk(f, lo, hi, detail::gauss_kronrod15(f, lo, hi).first, tol / static_cast<double>(n), 30);
  }
  return sum;
}

}  // namespace pontus
