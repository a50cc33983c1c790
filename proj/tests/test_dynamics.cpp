#include <catch_amalgamated.hpp>

#include <map>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

#include "pontus/dynamics.hpp"
#include "pontus/schedule.hpp"
#include "support.hpp"

using namespace pontus;
using Catch::Approx;

namespace {

const ParameterPoint kTiltS{{0.707, 0.707, 0.0}, {0.5, 0.1, 0.0}, PointLabel::S};
const ParameterPoint kTiltF{{0.707, 0.707, 0.0}, {0.01, 0.05, 0.0}, PointLabel::F};

}  // namespace

TEST_CASE("generator entries for an in-plane field with excitation-dominated rates") {
  const AffineGenerator g = assemble_generator(kTiltS);
  CHECK(g.drift(0, 0) == Approx(-0.3));
  CHECK(g.drift(1, 1) == Approx(-0.3));
  CHECK(g.drift(2, 2) == Approx(-0.6));
  CHECK(g.forcing.isApprox(Vec3(0, 0, 0.4)));
  CHECK(g.drift(0, 2) == Approx(2 * 0.707));
  CHECK(g.drift(2, 0) == Approx(-2 * 0.707));
}

TEST_CASE("generator equals the Pauli-basis projection of the Lindbladian") {
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const ParameterPoint p = oracle::random_point(3.0, 2.0);
    const AffineGenerator a = assemble_generator(p);
    const AffineGenerator b = superoperator_oracle(p);
    worst = std::max({worst, (a.drift - b.drift).cwiseAbs().maxCoeff(), (a.forcing - b.forcing).cwiseAbs().maxCoeff()});
    const auto [m, f] = oracle::bloch_generator(p);
    CHECK((a.drift - m).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((a.forcing - f).cwiseAbs().maxCoeff() < 1e-14);
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("steady state agrees with independent Gaussian elimination") {
  for (const ParameterPoint& p : {kTiltS, kTiltF}) {
    const AffineGenerator g = assemble_generator(p);
    const Vec3 r = steady_state_vector(g);
    const auto [m, f] = oracle::bloch_generator(p);
    CHECK((r - oracle::gauss_solve(m, -f)).norm() < 1e-13);
    CHECK(velocity(g, r).norm() < 1e-10);
    CHECK(r.norm() <= 1.0);
  }
  for (int i = 0; i < 200; ++i) {
    ParameterPoint p = oracle::random_point();
    p.gamma.plus += 0.05;  // keeps the generator comfortably invertible
    const auto [m, f] = oracle::bloch_generator(p);
    CHECK((steady_state_vector(assemble_generator(p)) - oracle::gauss_solve(m, -f)).norm() < 1e-10);
  }
}

TEST_CASE("pure excitation along the field axis pumps to the north pole") {
  const BlochVector r = steady_state(assemble_generator({{0, 0, 1}, {1, 0, 0}}));
  CHECK(r.vec().isApprox(Vec3(0, 0, 1), 1e-14));
}

TEST_CASE("all-zero rates give a singular generator") {
  const AffineGenerator g = assemble_generator({{0, 0, 1}, {0, 0, 0}});
  CHECK_FALSE(is_invertible(g));
  try {
    steady_state(g);
    FAIL("expected SingularGenerator");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::SingularGenerator);
    CHECK(std::string(e.what()).find("not invertible") != std::string::npos);
  }
}

TEST_CASE("constant propagation matches the matrix exponential, including the singular case") {
  const AffineGenerator g = assemble_generator(kTiltF);
  const Vec3 r0(0.1, -0.2, 0.3);
  const Vec3 rss = steady_state_vector(g);
  for (double t : {0.0, 0.5, 3.0, 40.0}) {
    const Mat3 m = t * g.drift;
    const Vec3 ref = Mat3(m.exp()) * (r0 - rss) + rss;
    CHECK((propagate_constant(g, r0, t) - ref).norm() < 1e-12);
  }

  // Pure precession about h: |r| and r.h are conserved.
  const ParameterPoint unitary{{0.3, -0.4, 1.2}, {0, 0, 0}};
  const AffineGenerator gu = assemble_generator(unitary);
  const Vec3 hv = unitary.h.vec();
  for (double t : {0.7, 5.0, 33.3}) {
    const Vec3 r = propagate_constant(gu, r0, t);
    CHECK(r.norm() == Approx(r0.norm()).epsilon(1e-12));
    CHECK(r.dot(hv) == Approx(r0.dot(hv)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(propagate_constant(g, r0, -1.0), Error);
}

TEST_CASE("Markovian evolution contracts the trace distance") {
  for (int pair = 0; pair < 100; ++pair) {
    const AffineGenerator g = assemble_generator(oracle::random_point(2.0, 1.0));
    const Vec3 a = oracle::random_in_ball(), b = oracle::random_in_ball();
    double prev = trace_distance(a, b);
    for (int k = 1; k <= 40; ++k) {
      const double t = 0.25 * k;
      const double d = trace_distance(propagate_constant(g, a, t), propagate_constant(g, b, t));
      CHECK(d <= prev + 1e-12);
      prev = d;
    }
  }
}

TEST_CASE("adaptive integration reproduces exact constant-generator flow") {
  const AffineGenerator g = assemble_generator(kTiltF);
  const BlochVector r0(steady_state_vector(assemble_generator(kTiltS)));
  const BlochVector target = steady_state(g);
  IntegratorConfig cfg;
  cfg.t_cap = 30.0;
  const Trajectory tr = integrate([](double) { return kTiltF; }, r0, target, cfg, StopRule{1e-4, 0.0, false});
  CHECK(tr.flags.timed_out);
  CHECK_FALSE(tr.flags.converged);
  REQUIRE(tr.samples.size() == 601);
  double worst = 0.0;
  for (const Sample& s : tr.samples) worst = std::max(worst, (s.r.vec() - propagate_constant(g, r0.vec(), s.t)).norm());
  CHECK(worst < 1e-8);
}

TEST_CASE("adaptive integration agrees with Richardson-extrapolated product integration") {
  const ExponentialCosineSchedule law{kTiltS.gamma, kTiltF.gamma, kTiltS.h, 0.3, 0.8};
  auto sched = [&](double t) { return ParameterPoint{law.h, rate_at(law, t), PointLabel::Custom}; };
  const Vec3 r0 = steady_state_vector(assemble_generator(kTiltS));
  const double T = 6.0;

  const Vec3 p1 = product_integration_oracle(sched, r0, T, 400);
  const Vec3 p2 = product_integration_oracle(sched, r0, T, 800);
  const Vec3 p4 = product_integration_oracle(sched, r0, T, 1600);
  const double ratio = (p1 - p2).norm() / (p2 - p4).norm();
  CHECK(ratio == Approx(4.0).epsilon(0.05));  // midpoint rule is second order
  const Vec3 extrap = p4 + (p4 - p2) / 3.0;

  IntegratorConfig cfg;
  cfg.t_cap = T;
  cfg.sample_stride = 0.5;
  const Trajectory tr = integrate(sched, BlochVector(r0), BlochVector(), cfg, StopRule{1e-4, 0.0, false});
  REQUIRE(tr.samples.back().t == Approx(T));
  CHECK((tr.samples.back().r.vec() - extrap).norm() < 1e-8);
}

TEST_CASE("integration leaving the ball raises BallViolation") {
  // Strongly negative decay pushes the state outward.
  const ParameterPoint bad{{0, 0, 0}, {-0.5, -0.5, 0}};
  IntegratorConfig cfg;
  cfg.t_cap = 50.0;
  try {
    integrate([&](double) { return bad; }, BlochVector(0, 0, 0.5), BlochVector(), cfg);
    FAIL("expected BallViolation");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::BallViolation);
  }
}

TEST_CASE("velocity field vanishes at the attractor and is rotation-invariant for pure precession") {
  const AffineGenerator g = assemble_generator({{0, 0, 1}, {0.3, 0.3, 0.1}});  // attractor at the origin
  const auto field = velocity_field(g, 0.25);
  bool found = false;
  for (const auto& s : field) {
    CHECK(s.r.norm() <= 1.0 + 1e-12);
    if (s.r.norm() == 0.0) {
      found = true;
      CHECK(s.v.norm() < 1e-15);
    }
  }
  CHECK(found);

  // h along z: speed depends only on the distance from the z axis.
  const auto uni = velocity_field(assemble_generator({{0, 0, 0.8}, {0, 0, 0}}), 0.125);
  std::map<long, double> speed_by_radius;
  for (const auto& s : uni) {
    const long key = std::lround(1e6 * std::hypot(s.r.x(), s.r.y()));
    const double sp = s.v.norm();
    auto [it, fresh] = speed_by_radius.emplace(key, sp);
    if (!fresh) CHECK(sp == Approx(it->second).margin(1e-12));
  }

  std::ostringstream os;
  write_velocity_csv(os, field);
  CHECK(os.str().rfind("rx,ry,rz,vx,vy,vz,speed\n", 0) == 0);
  CHECK_THROWS_AS(velocity_field(g, 0.1, 1.5), Error);
}

TEST_CASE("trajectory CSV layout") {
  Trajectory tr;
  Sample s;
  s.t = 0.05;
  s.r = BlochVector(0.1, 0.2, 0.3);
  s.dist = 0.25;
  s.rates = {0.5, 0.1, 0.0};
  tr.samples.push_back(s);
  std::ostringstream os;
  write_trajectory_csv(os, tr);
  CHECK(os.str() == "t,rx,ry,rz,dist,gp,gm,gz\n"
                    "0.050000000000000003,0.10000000000000001,0.20000000000000001,0.29999999999999999,0.25,"
                    "0.5,0.10000000000000001,0\n");
}
