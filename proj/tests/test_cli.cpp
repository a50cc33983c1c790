#include <catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

using json = nlohmann::json;
namespace fs = std::filesystem;
using Catch::Approx;

namespace {

const fs::path kWork = fs::temp_directory_path() / "pontus_cli_test";

std::string cfg(const std::string& name) { return std::string(PONTUS_CONFIG_DIR) + "/" + name + ".json"; }
std::string cli_case(const std::string& name) { return std::string(PONTUS_CASES_DIR) + "/" + name + ".json"; }

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Run pontus(const std::string& args) {
  fs::create_directories(kWork);
  const fs::path out = kWork / "stdout.txt", err = kWork / "stderr.txt";
  const std::string cmd = std::string("PONTUS_LOG=warn ") + PONTUS_CLI + " " + args + " > " + out.string() + " 2> " +
                          err.string();
  const int st = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

fs::path write_config(const std::string& name, const json& j) {
  fs::create_directories(kWork);
  const fs::path p = kWork / name;
  std::ofstream(p) << j.dump(2);
  return p;
}

std::string out_dir(const std::string& name) { return (kWork / name).string(); }

}  // namespace

TEST_CASE("exit codes") {
  const Run ok = pontus("--config " + cli_case("z_axis") + " steady-state");
  CHECK(ok.code == 0);
  const json j = json::parse(ok.out);
  CHECK(j["S"]["r"][2].get<double>() == Approx(1.0));
  CHECK(j["S"]["residual"].get<double>() < 1e-12);

  const Run unknown = pontus("--config " + cli_case("unknown_key") + " steady-state");
  CHECK(unknown.code == 1);
  CHECK(unknown.err.find("colour") != std::string::npos);

  const Run singular = pontus("--config " + cli_case("zero_rates") + " steady-state");
  CHECK(singular.code == 2);
  CHECK(singular.err.find("not invertible") != std::string::npos);

  const Run capped = pontus("--config " + cfg("fig2") + " --output " + out_dir("capped") + " --t-cap 10 simulate");
  CHECK(capped.code == 3);
  CHECK(fs::exists(kWork / "capped" / "fig2_trajectory.csv"));

  json bad_grid = json::parse(slurp(cfg("fig5a")));
  bad_grid["sweep"]["kappa"]["n"] = 1;
  CHECK(pontus("--config " + write_config("bad_grid.json", bad_grid).string() + " gain-map").code == 1);

  CHECK(pontus("--config /nonexistent.json steady-state").code == 1);
  CHECK(pontus("--config " + cli_case("z_axis") + " no-such-command").code == 1);
  CHECK(pontus("--config " + cli_case("z_axis") + " --epsilon -1 steady-state").code == 1);
}

TEST_CASE("continuous run with baseline reports the speed-up") {
  const Run r = pontus("--config " + cfg("fig2") + " --output " + out_dir("fig2") + " simulate --with-baseline");
  REQUIRE(r.code == 0);
  const json j = json::parse(r.out);
  CHECK(j["protocol"] == "continuous");
  CHECK(j["tau"].get<double>() == Approx(60.0).epsilon(0.10));
  CHECK(j["tau_direct"].get<double>() == Approx(160.0).epsilon(0.10));
  CHECK(j["gain"].get<double>() == Approx(1.66).margin(0.15));
  CHECK(j["class"] == "strong");
  CHECK(j["inconclusive"] == false);
  CHECK(json::parse(slurp(kWork / "fig2" / "fig2_result.json")) == j);
  const std::string traj = slurp(kWork / "fig2" / "fig2_trajectory.csv");
  CHECK(traj.rfind("t,rx,ry,rz,dist,gp,gm,gz\n", 0) == 0);
  CHECK(fs::exists(kWork / "fig2" / "fig2_baseline.csv"));

  // The embedded parameters reproduce the run.
  json params = j["params"];
  params["output"]["dir"] = out_dir("fig2_again");
  const Run again = pontus("--config " + write_config("fig2_again.json", params).string() + " simulate");
  REQUIRE(again.code == 0);
  CHECK(json::parse(again.out)["tau"].get<double>() == j["tau"].get<double>());
}

TEST_CASE("oscillating drive is flagged inconclusive without failing") {
  const Run r = pontus("--config " + cfg("fig3b") + " --output " + out_dir("fig3b") + " simulate --with-baseline");
  REQUIRE(r.code == 0);
  const json j = json::parse(r.out);
  CHECK(j["inconclusive"] == true);
  CHECK(j["class"] == "inconclusive");
}

TEST_CASE("two-step run at a fixed switch time") {
  json c = json::parse(slurp(cfg("fig1")));
  c.erase("t_I_scan");
  c["t_I"] = 0.5;
  c["output"]["dir"] = out_dir("two_step");
  const Run r = pontus("--config " + write_config("two_step.json", c).string() + " simulate");
  REQUIRE(r.code == 0);
  const json j = json::parse(r.out);
  CHECK(j["protocol"] == "two-step");
  CHECK(j["d_I"].get<double>() < j["d_SF"].get<double>());
  CHECK(j["class"] == "weak-type-A");
  CHECK(j["gain"].get<double>() > 0.0);
}

TEST_CASE("small gain map writes CSV rows and a sidecar") {
  json c = json::parse(slurp(cfg("fig5a")));
  c["sweep"]["kappa"] = {{"lo", 0.5}, {"hi", 50}, {"n", 3}};
  c["sweep"]["axis2"] = {{"lo", 0}, {"hi", 2}, {"n", 4}};
  c["output"]["dir"] = out_dir("gain");
  const Run r = pontus("--config " + write_config("gain.json", c).string() + " --jobs 2 gain-map");
  REQUIRE(r.code == 0);
  const std::string csv = slurp(kWork / "gain" / "fig5a_gain_map.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 13);
  const json side = json::parse(slurp(kWork / "gain" / "fig5a_gain_map.json"));
  CHECK(side["rows"] == 12);
  CHECK(side["boundary"].size() == 3);
  CHECK(side["spec"]["kind"] == "kappa-omega");
}

TEST_CASE("non-Markovianity commands") {
  const Run m = pontus("--config " + cfg("fig5a") + " nm-measure");
  REQUIRE(m.code == 0);
  const json j = json::parse(m.out);
  REQUIRE(j["channels"].size() == 3);
  double total = 0.0;
  for (const auto& ch : j["channels"]) {
    CHECK(ch["f_value"].get<double>() == Approx(ch["f_quadrature"].get<double>()).margin(1e-8));
    CHECK(ch["n_bound"].get<int>() <= ch["n_intervals"].get<int>());
    total += ch["f_value"].get<double>();
  }
  CHECK(j["f_total"].get<double>() == Approx(total));
  CHECK(j["non_markovian"] == (j["omega"].get<double>() > j["omega_min"].get<double>()));
  CHECK(j["boundary"].size() == 30);

  const Run b = pontus("--config " + cfg("fig4b") + " nm-boundary");
  REQUIRE(b.code == 0);
  const json jb = json::parse(b.out);
  CHECK(jb["channels"][0]["alpha"].get<double>() == Approx(0.47609).margin(1e-5));
  CHECK(jb["channels"][1]["alpha"] == "no-solution");
  CHECK(jb["boundary"].size() == 30);
}

TEST_CASE("velocity field export") {
  const Run r = pontus("--config " + cfg("fig2") + " --output " + out_dir("vel") + " velocity-field");
  REQUIRE(r.code == 0);
  const json j = json::parse(r.out);
  CHECK(j["point"] == "F");
  const std::string csv = slurp(kWork / "vel" / "fig2_velocity.csv");
  CHECK(csv.rfind("rx,ry,rz,vx,vy,vz,speed\n", 0) == 0);
  CHECK(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')) == j["n_points"].get<std::size_t>() + 1);
}
