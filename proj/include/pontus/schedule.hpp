#pragma once

// Time-dependent parameter laws driving the Bloch dynamics.

#include <algorithm>
#include <cmath>
#include <limits>
#include <variant>

#include "pontus/core.hpp"

namespace pontus {

struct ConstantSchedule {
  ParameterPoint p;
};

/// Auxiliary parameters on (0, t_I], final parameters afterwards.
struct TwoStepSchedule {
  ParameterPoint pA;
  ParameterPoint pF;
  double t_I = 0.0;
};

/// gamma(t) = gamma_F + (gamma_S - gamma_F) exp(-kappa t) cos(omega t), static field.
struct ExponentialCosineSchedule {
  RateTriple gamma_S;
  RateTriple gamma_F;
  FieldVector h;
  double kappa = 0.0;
  double omega = 0.0;

  /// Largest modulation amplitude over the three channels.
  double max_amplitude() const {
    double m = 0.0;
    for (Channel c : kChannels) m = std::max(m, std::abs(gamma_S[c] - gamma_F[c]));
    return m;
  }
};

using RateSchedule = std::variant<ConstantSchedule, TwoStepSchedule, ExponentialCosineSchedule>;

inline RateSchedule make_two_step(const ParameterPoint& pA, const ParameterPoint& pF, double t_I) {
  if (!(t_I > 0.0)) throw Error(ErrorKind::InvalidArgument, "two-step switch time must be positive");
  return TwoStepSchedule{pA, pF, t_I};
}

inline RateSchedule make_exponential_cosine(const RateTriple& gS, const RateTriple& gF,
                                            const FieldVector& h, double kappa, double omega) {
  if (!(kappa >= 0.0) || !(omega >= 0.0))
    throw Error(ErrorKind::InvalidArgument, "kappa and omega must be nonnegative");
  return ExponentialCosineSchedule{gS, gF, h, kappa, omega};
}

inline RateTriple rate_at(const ExponentialCosineSchedule& s, double t) {
  const double env = std::exp(-s.kappa * t) * std::cos(s.omega * t);
  RateTriple g;
  for (Channel c : kChannels) g[c] = s.gamma_F[c] + (s.gamma_S[c] - s.gamma_F[c]) * env;
  return g;
}

inline ParameterPoint point_at(const RateSchedule& s, double t) {
  return std::visit(
      [t](const auto& v) -> ParameterPoint {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, ConstantSchedule>) {
          return v.p;
        } else if constexpr (std::is_same_v<T, TwoStepSchedule>) {
          return t <= v.t_I ? v.pA : v.pF;
        } else {
          return ParameterPoint{v.h, rate_at(v, t), PointLabel::Custom};
        }
      },
      s);
}

inline RateTriple rate_at(const RateSchedule& s, double t) { return point_at(s, t).gamma; }

/// Time after which the schedule no longer changes by more than `eps`:
/// the switch time for a two-step law, the time where the modulation envelope
/// drops below eps for the exponential-cosine law.
inline double settle_time(const RateSchedule& s, double eps) {
  return std::visit(
      [eps](const auto& v) -> double {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, ConstantSchedule>) {
          return 0.0;
        } else if constexpr (std::is_same_v<T, TwoStepSchedule>) {
          return v.t_I;
        } else {
          const double amp = v.max_amplitude();
          if (amp < eps) return 0.0;
          if (v.kappa <= 0.0) return std::numeric_limits<double>::infinity();
          return std::log(amp / eps) / v.kappa;
        }
      },
      s);
}

}  // namespace pontus
