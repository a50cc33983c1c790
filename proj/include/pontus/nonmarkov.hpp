#pragma once

// Non-Markovianity of the exponential-cosine rate law: the per-channel
// measure F = -int_0^T min(0, gamma(s)) ds, the intervals with negative
// rates, and the Markov/non-Markov boundary omega = kappa / alpha.

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <utility>
#include <vector>

#include "pontus/core.hpp"
#include "pontus/numeric.hpp"
#include "pontus/schedule.hpp"

namespace pontus {

using Interval = std::pair<double, double>;

struct NmChannelReport {
  Channel channel = Channel::Plus;
  double f_value = 0.0;
  int n_intervals = 0;
  std::vector<Interval> intervals;
};

/// Direct quadrature of the measure on [0, T]. Sign changes of gamma are
/// located by scanning at chunk / 16 and bisecting, so each piece handed to
/// the quadrature is smooth; nothing about the rate law is assumed. Negative
/// lobes narrower than the scan step can be missed.
template <class RateFn>
double nm_measure_quadrature(RateFn&& gamma, double T, double quad_tol = 1e-10, double chunk = 1.0) {
  if (!(T > 0.0)) throw Error(ErrorKind::InvalidArgument, "quadrature horizon must be positive");
  auto integrand = [&](double s) { return -std::min(0.0, gamma(s)); };
  const auto n = static_cast<long>(std::ceil(16.0 * T / chunk));
  std::vector<double> cuts{0.0};
  double t0 = 0.0, g0 = gamma(0.0);
  for (long i = 1; i <= n; ++i) {
    const double t1 = i == n ? T : T * static_cast<double>(i) / static_cast<double>(n);
    const double g1 = gamma(t1);
    if ((g0 < 0.0) != (g1 < 0.0)) cuts.push_back(bisect([&](double t) { return gamma(t); }, t0, t1, 1e-15));
    t0 = t1;
    g0 = g1;
  }
  cuts.push_back(T);
  double sum = 0.0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k)
    sum += integrate_adaptive(integrand, cuts[k], cuts[k + 1], quad_tol / static_cast<double>(cuts.size()), chunk);
  return sum;
}

inline double nm_measure_quadrature(const RateSchedule& s, Channel ch, double T, double quad_tol = 1e-10) {
  double chunk = 1.0;
  if (const auto* ec = std::get_if<ExponentialCosineSchedule>(&s); ec && ec->omega > 0.0)
    chunk = std::min(chunk, 0.25 * std::numbers::pi / ec->omega);
  return nm_measure_quadrature([&](double t) { return rate_at(s, t)[ch]; }, T, quad_tol, chunk);
}

/// Lower-bound estimate of the number of negative-rate intervals, clamped at 0.
inline int interval_count_bound(double gS, double gF, double kappa, double omega) {
  const double delta = gS - gF;
  if (!(gF > 0.0) || !(delta > 0.0) || !(kappa > 0.0)) return 0;
  const double x = omega / (2.0 * std::numbers::pi * kappa) * std::log(delta / gF) - 0.5;
  return std::max(0, static_cast<int>(std::floor(x)));
}

/// Time intervals where gF + (gS - gF) exp(-kappa t) cos(omega t) < 0,
/// found lobe by lobe with bisection. `horizon` truncates the search; it is
/// required when the set is infinite (gF = 0 with a nonzero modulation, or kappa = 0).
inline std::vector<Interval> negative_intervals(double gS, double gF, double kappa, double omega,
                                                double horizon = std::numeric_limits<double>::infinity()) {
  if (!(kappa >= 0.0) || !(omega >= 0.0) || (kappa == 0.0 && omega == 0.0))
    throw Error(ErrorKind::InvalidArgument, "need kappa > 0 or omega > 0");
  if (gS < 0.0 || gF < 0.0) throw Error(ErrorKind::InvalidArgument, "endpoint rates must be nonnegative");
  std::vector<Interval> out;
  const double delta = gS - gF;
  if (omega == 0.0 || delta == 0.0) return out;

  const double pi = std::numbers::pi;
  auto g = [=](double t) { return gF + delta * std::exp(-kappa * t) * std::cos(omega * t); };
  const double shift = std::atan(kappa / omega);
  // Lobes where the modulation opposes gF: centred at odd multiples of pi for
  // delta > 0, even multiples for delta < 0.
  const double first_center = delta > 0.0 ? pi : 2.0 * pi;

  for (long k = 0;; ++k) {
    const double center = first_center + 2.0 * pi * static_cast<double>(k);
    const double lo = (center - 0.5 * pi) / omega;
    const double hi = (center + 0.5 * pi) / omega;
    if (lo >= horizon) break;
    if (gF == 0.0) {
      if (!std::isfinite(horizon))
        throw Error(ErrorKind::DivergentIntervalCount, "gamma_F = 0: infinitely many negative lobes");
      out.emplace_back(lo, std::min(hi, horizon));
      continue;
    }
    const double t_min = (center - shift) / omega;  // minimum of the lobe
    if (g(t_min) >= 0.0) break;  // later lobes are shallower
    if (kappa == 0.0 && !std::isfinite(horizon))
      throw Error(ErrorKind::DivergentIntervalCount, "kappa = 0: negative lobes never decay");
    const double a = bisect(g, lo, t_min);
    const double b = bisect(g, t_min, hi);
    if (a >= horizon) break;
    out.emplace_back(a, std::min(b, horizon));
  }
  return out;
}

/// Measure integrated to t -> infinity from the interval endpoints. For gF = 0
/// the lobes never terminate and the value comes from quadrature truncated
/// where the remaining envelope integral is below 1e-12.
inline double nm_measure_closed_form(double gS, double gF, double kappa, double omega) {
  if (!(kappa > 0.0)) throw Error(ErrorKind::InvalidArgument, "closed form requires kappa > 0");
  if (omega == 0.0) return 0.0;
  const double delta = gS - gF;
  if (gF == 0.0 && delta != 0.0) {
    const double T = std::max(1.0, std::log(std::abs(delta) / (kappa * 1e-12)) / kappa);
    const ExponentialCosineSchedule s{RateTriple{gS, 0, 0}, RateTriple{gF, 0, 0}, {}, kappa, omega};
    return nm_measure_quadrature(RateSchedule{s}, Channel::Plus, T, 1e-11);
  }
  const double c = delta * omega / (kappa * kappa + omega * omega);
  auto antiderivative = [=](double t) {
    return gF * t + c * std::exp(-kappa * t) * std::sin(omega * t);
  };
  double f = 0.0;
  for (const auto& [a, b] : negative_intervals(gS, gF, kappa, omega))
    f -= antiderivative(b) - antiderivative(a);
  return std::max(0.0, f);
}

/// alpha > 0 solving exp(-alpha (pi - atan alpha)) / sqrt(1 + alpha^2) = gF / (gS - gF),
/// the tangency of the first negative lobe.
inline double markov_boundary_alpha(double gS, double gF) {
  if (!(gF > 0.0) || !(gS > gF))
    throw Error(ErrorKind::NoSolution, "boundary requires gamma_S > gamma_F > 0");
  const double ratio = gF / (gS - gF);
  if (!(ratio < 1.0))
    throw Error(ErrorKind::NoSolution, "modulation amplitude cannot reach -gamma_F (ratio >= 1)");
  auto lhs = [ratio](double a) {
    return std::exp(-a * (std::numbers::pi - std::atan(a))) / std::sqrt(1.0 + a * a) - ratio;
  };
  double hi = 1.0;
  while (lhs(hi) > 0.0) hi *= 2.0;
  return bisect(lhs, 0.0, hi, 1e-13);
}

/// Smallest omega giving negative rates in this channel at the given kappa;
/// nullopt if the channel stays Markovian for every omega.
inline std::optional<double> channel_boundary_omega(double gS, double gF, double kappa) {
  if (gF == 0.0 && gS > 0.0) return 0.0;
  try {
    return kappa / markov_boundary_alpha(gS, gF);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::NoSolution) return std::nullopt;
    throw;
  }
}

struct ChannelRates {
  double gS = 0.0;
  double gF = 0.0;
};

inline std::array<ChannelRates, 3> channel_rates(const RateTriple& gS, const RateTriple& gF) {
  std::array<ChannelRates, 3> out;
  for (Channel c : kChannels) out[static_cast<std::size_t>(c)] = {gS[c], gF[c]};
  return out;
}

/// Minimum over channels of the boundary frequency.
inline std::optional<double> boundary_omega(const std::array<ChannelRates, 3>& ch, double kappa) {
  std::optional<double> best;
  for (const auto& c : ch) {
    const auto w = channel_boundary_omega(c.gS, c.gF, kappa);
    if (w && (!best || *w < *best)) best = w;
  }
  return best;
}

inline NmChannelReport channel_report(Channel ch, double gS, double gF, double kappa, double omega) {
  NmChannelReport rep;
  rep.channel = ch;
  if (omega == 0.0) return rep;
  rep.f_value = nm_measure_closed_form(gS, gF, kappa, omega);
  if (gF == 0.0 && gS != 0.0) {
    // Report the lobes up to the quadrature horizon.
    const double T = std::log(std::abs(gS) / (kappa * 1e-12)) / kappa;
    rep.intervals = negative_intervals(gS, gF, kappa, omega, T);
  } else {
    rep.intervals = negative_intervals(gS, gF, kappa, omega);
  }
  rep.n_intervals = static_cast<int>(rep.intervals.size());
  if (rep.n_intervals == 0) rep.f_value = 0.0;
  return rep;
}

struct NonMarkovVerdict {
  bool non_markovian = false;
  double f_total = 0.0;
};

/// Non-Markovian iff omega exceeds the smallest channel boundary; the total
/// measure is the sum of the closed-form channel values.
inline NonMarkovVerdict is_non_markovian(const std::array<ChannelRates, 3>& ch, double kappa, double omega) {
  if (!(kappa > 0.0)) throw Error(ErrorKind::InvalidArgument, "kappa must be positive");
  NonMarkovVerdict v;
  const auto w = boundary_omega(ch, kappa);
  v.non_markovian = w.has_value() && omega > *w;
  if (!v.non_markovian) return v;
  for (const auto& c : ch) v.f_total += nm_measure_closed_form(c.gS, c.gF, kappa, omega);
  return v;
}

}  // namespace pontus
