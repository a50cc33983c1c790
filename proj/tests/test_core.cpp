#include <catch_amalgamated.hpp>

#include <limits>

#include "pontus/core.hpp"
#include "pontus/format.hpp"
#include "support.hpp"

using namespace pontus;
using Catch::Approx;

TEST_CASE("BlochVector enforces the closed unit ball") {
  CHECK_NOTHROW(BlochVector(0.3, -0.4, 0.5));
  CHECK_NOTHROW(BlochVector(0.0, 0.0, 1.0));

  const BlochVector near(0.0, 0.0, 1.0 + 0.5 * kBallTolerance);
  CHECK(near.norm() == Approx(1.0).epsilon(1e-15));

  try {
    BlochVector(0.0, 0.0, 1.0 + 10 * kBallTolerance);
    FAIL("expected BallViolation");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::BallViolation);
  }
  try {
    BlochVector(std::numeric_limits<double>::quiet_NaN(), 0.0, 0.0);
    FAIL("expected NonFinite");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NonFinite);
  }
}

TEST_CASE("trace distance matches the density-matrix eigenvalue definition") {
  for (int i = 0; i < 500; ++i) {
    const Vec3 a = oracle::random_in_ball(), b = oracle::random_in_ball();
    CHECK(trace_distance(BlochVector(a), BlochVector(b)) ==
          Approx(oracle::density_trace_distance(a, b)).margin(1e-14));
  }
  // Antipodal pure states are perfectly distinguishable.
  CHECK(trace_distance(BlochVector(0, 0, 1), BlochVector(0, 0, -1)) == Approx(1.0));
}

TEST_CASE("trace distance satisfies the metric axioms") {
  for (int i = 0; i < 1000; ++i) {
    const BlochVector a(oracle::random_in_ball()), b(oracle::random_in_ball()), c(oracle::random_in_ball());
    const double ab = trace_distance(a, b), bc = trace_distance(b, c), ac = trace_distance(a, c);
    CHECK(trace_distance(a, a) == 0.0);
    CHECK(ab >= 0.0);
    CHECK(ab <= 1.0 + 1e-15);
    CHECK(ab == trace_distance(b, a));
    CHECK(ac <= ab + bc + 1e-15);
  }
}

TEST_CASE("endpoint validation rejects negative and non-finite parameters") {
  ParameterPoint p{{0, 0, 1}, {0.1, 0.2, 0.0}};
  CHECK_NOTHROW(validate_endpoint(p));

  p.gamma.minus = -1e-3;
  try {
    validate_endpoint(p);
    FAIL("expected NegativeEndpointRate");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NegativeEndpointRate);
  }

  p.gamma.minus = 0.1;
  p.h.y = std::numeric_limits<double>::infinity();
  try {
    validate_endpoint(p);
    FAIL("expected NonFinite");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NonFinite);
  }
}

TEST_CASE("parameter-point equality ignores the label") {
  const ParameterPoint a{{1, 0, 0}, {0.5, 0.1, 0}, PointLabel::S};
  const ParameterPoint b{{1, 0, 0}, {0.5, 0.1, 0}, PointLabel::F};
  CHECK(a == b);
  CHECK(RateTriple{1, 2, 3}[Channel::Minus] == 2.0);
}

TEST_CASE("fmt17 round-trips doubles and never depends on the locale") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 154.93278200668283}) {
    CHECK(std::stod(fmt17(v)) == v);
    CHECK(fmt17(v).find(',') == std::string::npos);
  }
  CHECK(fmt17(std::numeric_limits<double>::quiet_NaN()) == "nan");
  CHECK(fmt17(-std::numeric_limits<double>::infinity()) == "-inf");
}
