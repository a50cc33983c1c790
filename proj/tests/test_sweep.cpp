#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <sstream>

#include "pontus/sweep.hpp"

using namespace pontus;
using Catch::Approx;

namespace {

SweepSpec theta_spec() {
  SweepSpec s;
  s.kind = SweepKind::KappaTheta;
  s.gamma_S = {0.75, 0.75, 0.75};
  s.gamma_F = {0.05, 0.1, 0.15};
  s.omega = 0.0;
  s.kappa = {0.5, 100.0, 3, true};
  s.axis2 = {0.0, std::numbers::pi / 2, 3, false};
  return s;
}

SweepSpec omega_spec() {
  SweepSpec s;
  s.kind = SweepKind::KappaOmega;
  s.gamma_S = {0.75, 0.75, 0.75};
  s.gamma_F = {0.05, 0.1, 0.15};
  s.field = {1.0, 0.0, 0.0};
  s.kappa = {0.5, 100.0, 3, true};
  s.axis2 = {0.0, 2.0, 3, false};
  return s;
}

bool same_bits(double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; }

}  // namespace

TEST_CASE("grid values hit both endpoints exactly") {
  const auto v = Grid{0.01, 100.0, 30, true}.values();
  REQUIRE(v.size() == 30);
  CHECK(v.front() == 0.01);
  CHECK(v.back() == 100.0);
  for (std::size_t i = 1; i < v.size(); ++i) CHECK(v[i] / v[i - 1] == Approx(std::pow(1e4, 1.0 / 29)));
  const auto lin = Grid{0.0, 2.0, 5, false}.values();
  CHECK(lin[2] == Approx(1.0));

  CHECK_THROWS_AS(Grid({0.0, 1.0, 1, false}).validate("x"), Error);
  CHECK_THROWS_AS(Grid({1.0, 1.0, 4, false}).validate("x"), Error);
  CHECK_THROWS_AS(Grid({0.0, 1.0, 4, true}).validate("x"), Error);
  SweepSpec bad = omega_spec();
  bad.axis2.lo = -1.0;
  CHECK_THROWS_AS(run_sweep(bad), Error);
}

TEST_CASE("sweep output does not depend on the worker count") {
  SweepSpec one = theta_spec();
  one.jobs = 1;
  SweepSpec three = one;
  three.jobs = 3;
  const GainMap a = run_sweep(one), b = run_sweep(three);
  REQUIRE(a.cells.size() == 9);
  REQUIRE(b.cells.size() == 9);
  for (std::size_t k = 0; k < a.cells.size(); ++k) {
    CHECK(same_bits(a.cells[k].gain, b.cells[k].gain));
    CHECK(same_bits(a.cells[k].tau_cpm, b.cells[k].tau_cpm));
    CHECK(a.cells[k].status == b.cells[k].status);
  }
  std::ostringstream sa, sb;
  write_gain_map_csv(sa, a);
  write_gain_map_csv(sb, b);
  CHECK(sa.str() == sb.str());
}

TEST_CASE("kappa-theta map structure") {
  std::size_t calls = 0;
  SweepSpec spec = theta_spec();
  spec.jobs = 1;
  const GainMap m = run_sweep(spec, [&](std::size_t done, std::size_t total) {
    ++calls;
    CHECK(done <= total);
  });
  CHECK(calls == 9);
  for (std::size_t j = 0; j < m.axis2.size(); ++j) {
    // One baseline per column.
    for (std::size_t i = 1; i < m.axis1.size(); ++i) CHECK(same_bits(m.at(i, j).tau_dir, m.at(0, j).tau_dir));
    const GainCell& fast = m.at(m.axis1.size() - 1, j);
    REQUIRE(fast.status == "ok");
    CHECK(fast.tau_cpm == Approx(fast.tau_dir).epsilon(0.02));
    CHECK(std::abs(fast.gain) < 0.05);
  }
  for (const auto& c : m.cells) {
    CHECK_FALSE(c.non_markovian);  // omega = 0
    CHECK(c.f_total == 0.0);
  }

  std::ostringstream os;
  write_gain_map_csv(os, m);
  const std::string csv = os.str();
  CHECK(csv.rfind("axis1,axis2,tau_dir,tau_cpm,gain,inconclusive,non_markovian,f_total,status\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 10);
}

TEST_CASE("omega = 0 row matches the theta = pi/2 column") {
  SweepSpec ts = theta_spec();
  ts.jobs = 1;
  SweepSpec os = omega_spec();
  os.jobs = 1;
  const GainMap mt = run_sweep(ts), mo = run_sweep(os);
  for (std::size_t i = 0; i < mt.axis1.size(); ++i) {
    const GainCell& a = mt.at(i, 2);
    const GainCell& b = mo.at(i, 0);
    REQUIRE(a.status == "ok");
    REQUIRE(b.status == "ok");
    CHECK(a.axis1 == b.axis1);
    CHECK(a.tau_cpm == Approx(b.tau_cpm).epsilon(1e-6));
    CHECK(a.gain == Approx(b.gain).margin(1e-6));
  }
}

TEST_CASE("non-Markovian flags follow the channel verdict") {
  SweepSpec s = omega_spec();
  s.jobs = 1;
  const GainMap m = run_sweep(s);
  const auto ch = channel_rates(s.gamma_S, s.gamma_F);
  REQUIRE(m.boundary.size() == m.axis1.size());
  for (std::size_t i = 0; i < m.axis1.size(); ++i) {
    REQUIRE(m.boundary[i].omega_min);
    CHECK(*m.boundary[i].omega_min == Approx(*boundary_omega(ch, m.axis1[i])));
    for (std::size_t j = 0; j < m.axis2.size(); ++j) {
      const GainCell& c = m.at(i, j);
      const auto v = is_non_markovian(ch, c.axis1, c.axis2);
      CHECK(c.non_markovian == v.non_markovian);
      CHECK(c.f_total == v.f_total);
      CHECK(c.non_markovian == (c.axis2 > *m.boundary[i].omega_min));
    }
  }
}

TEST_CASE("failed cells carry a status instead of aborting the sweep") {
  SweepSpec s = theta_spec();
  s.jobs = 1;
  s.kappa = {0.01, 0.02, 2, true};
  s.axis2 = {1.0, 1.5, 2, false};
  s.cfg.t_cap = 20.0;
  const GainMap m = run_sweep(s);
  for (const auto& c : m.cells) CHECK(c.status == "direct-timeout");
}
