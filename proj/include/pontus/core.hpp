#pragma once

// Domain types for a driven, dissipative two-level system in the Bloch
// representation. Everything is dimensionless: energies in units of the
// initial field magnitude, times in the inverse of that unit.

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace pontus {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kBallTolerance = 1e-9;

enum class ErrorKind {
  NegativeEndpointRate,
  NonFinite,
  SingularGenerator,
  StepSizeUnderflow,
  BallViolation,
  Timeout,
  NotConverged,
  ZeroDenominator,
  NoSolution,
  DivergentIntervalCount,
  InvalidArgument,
  Config,
};

constexpr std::string_view to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::NegativeEndpointRate: return "NegativeEndpointRate";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::SingularGenerator: return "SingularGenerator";
    case ErrorKind::StepSizeUnderflow: return "StepSizeUnderflow";
    case ErrorKind::BallViolation: return "BallViolation";
    case ErrorKind::Timeout: return "Timeout";
    case ErrorKind::NotConverged: return "NotConverged";
    case ErrorKind::ZeroDenominator: return "ZeroDenominator";
    case ErrorKind::NoSolution: return "NoSolution";
    case ErrorKind::DivergentIntervalCount: return "DivergentIntervalCount";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::Config: return "Config";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Point in the closed unit ball. Construction enforces |r| <= 1 + kBallTolerance;
/// vectors that overshoot the sphere by less than the tolerance are projected onto it.
class BlochVector {
 public:
  BlochVector() : r_(Vec3::Zero()) {}
  BlochVector(double x, double y, double z) : BlochVector(Vec3(x, y, z)) {}
  explicit BlochVector(const Vec3& r) : r_(r) {
    if (!r_.allFinite()) throw Error(ErrorKind::NonFinite, "Bloch vector has non-finite components");
    const double n = r_.norm();
    if (n > 1.0 + kBallTolerance)
      throw Error(ErrorKind::BallViolation, "|r| = " + std::to_string(n) + " exceeds the Bloch ball");
    if (n > 1.0) r_ /= n;
  }

  const Vec3& vec() const noexcept { return r_; }
  double x() const noexcept { return r_.x(); }
  double y() const noexcept { return r_.y(); }
  double z() const noexcept { return r_.z(); }
  double norm() const noexcept { return r_.norm(); }

  friend bool operator==(const BlochVector& a, const BlochVector& b) { return a.r_ == b.r_; }

 private:
  Vec3 r_;
};

struct FieldVector {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Vec3 vec() const { return {x, y, z}; }
  bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
  friend bool operator==(const FieldVector&, const FieldVector&) = default;
};

enum class Channel : std::size_t { Plus = 0, Minus = 1, Z = 2 };
inline constexpr std::array<Channel, 3> kChannels{Channel::Plus, Channel::Minus, Channel::Z};

constexpr std::string_view to_string(Channel c) {
  switch (c) {
    case Channel::Plus: return "plus";
    case Channel::Minus: return "minus";
    case Channel::Z: return "z";
  }
  return "?";
}

/// Excitation, relaxation and pure-dephasing rates.
struct RateTriple {
  double plus = 0.0;
  double minus = 0.0;
  double z = 0.0;

  double operator[](Channel c) const {
    switch (c) {
      case Channel::Plus: return plus;
      case Channel::Minus: return minus;
      case Channel::Z: return z;
    }
    return 0.0;
  }
  double& operator[](Channel c) {
    switch (c) {
      case Channel::Plus: return plus;
      case Channel::Minus: return minus;
      default: return z;
    }
  }
  bool finite() const { return std::isfinite(plus) && std::isfinite(minus) && std::isfinite(z); }
  bool nonnegative() const { return plus >= 0.0 && minus >= 0.0 && z >= 0.0; }
  friend bool operator==(const RateTriple&, const RateTriple&) = default;
};

enum class PointLabel { S, A, F, Custom };

constexpr std::string_view to_string(PointLabel l) {
  switch (l) {
    case PointLabel::S: return "S";
    case PointLabel::A: return "A";
    case PointLabel::F: return "F";
    case PointLabel::Custom: return "custom";
  }
  return "?";
}

struct ParameterPoint {
  FieldVector h;
  RateTriple gamma;
  PointLabel label = PointLabel::Custom;

  friend bool operator==(const ParameterPoint& a, const ParameterPoint& b) {
    return a.h == b.h && a.gamma == b.gamma;
  }
};

/// r' = drift * r + forcing.
struct AffineGenerator {
  Mat3 drift = Mat3::Zero();
  Vec3 forcing = Vec3::Zero();
};

struct Sample {
  double t = 0.0;
  BlochVector r;
  RateTriple rates;
  double dist = 0.0;
  // One-sided derivatives of r at t. They differ only at a parameter quench.
  Vec3 v_left = Vec3::Zero();
  Vec3 v_right = Vec3::Zero();
};

struct TrajectoryFlags {
  bool converged = false;
  bool inconclusive = false;
  bool timed_out = false;
};

struct Trajectory {
  std::vector<Sample> samples;
  BlochVector target;
  double epsilon = 1e-4;
  std::optional<double> tau;
  TrajectoryFlags flags;
  // Rate-modulation transients are still active before this time (zero when
  // the schedule has no oscillatory component). An epsilon crossing earlier
  // than this is not a settled relaxation.
  double transient_end = 0.0;
};

inline double trace_distance(const BlochVector& a, const BlochVector& b) {
  return 0.5 * (a.vec() - b.vec()).norm();
}

inline double trace_distance(const Vec3& a, const Vec3& b) { return 0.5 * (a - b).norm(); }

/// Rejects static parameter points that cannot define a Lindblad generator.
inline ParameterPoint validate_endpoint(const ParameterPoint& p) {
  if (!p.h.finite() || !p.gamma.finite())
    throw Error(ErrorKind::NonFinite, "parameter point has non-finite entries");
  if (!p.gamma.nonnegative())
    throw Error(ErrorKind::NegativeEndpointRate,
                "static rates must be nonnegative (got " + std::to_string(p.gamma.plus) + ", " +
                    std::to_string(p.gamma.minus) + ", " + std::to_string(p.gamma.z) + ")");
  return p;
}

}  // namespace pontus
