// pontus: command-line driver for the protocol, classification,
// non-Markovianity and sweep routines.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "pontus/commands.hpp"

namespace {

struct GlobalFlags {
  std::string config;
  std::optional<std::string> output;
  std::optional<double> epsilon;
  std::optional<double> t_cap;
  std::optional<unsigned> jobs;
  std::optional<long long> seed;
};

int run(const std::string& cmd, const GlobalFlags& g, bool with_baseline) {
  pontus::CommandContext ctx;
  ctx.level = pontus::log_level_from_env();
  ctx.with_baseline = with_baseline;

  pontus::RunConfig cfg;
  try {
    cfg = pontus::load_config(g.config);
    if (g.output) cfg.output.dir = *g.output;
    if (g.epsilon) {
      if (!(*g.epsilon > 0.0)) throw pontus::Error(pontus::ErrorKind::Config, "--epsilon must be positive");
      cfg.epsilon = *g.epsilon;
    }
    if (g.t_cap) {
      if (!(*g.t_cap > 0.0)) throw pontus::Error(pontus::ErrorKind::Config, "--t-cap must be positive");
      cfg.integrator.t_cap = *g.t_cap;
    }
    if (g.jobs) cfg.jobs = *g.jobs;
  } catch (const pontus::Error& e) {
    ctx.log(pontus::LogLevel::Error, e.what());
    return static_cast<int>(pontus::ExitCode::Config);
  }
  if (g.seed) ctx.log(pontus::LogLevel::Debug, "--seed is accepted but unused; all computation is deterministic");

  if (cmd == "steady-state") return pontus::cmd_steady_state(cfg, ctx);
  if (cmd == "simulate") return pontus::cmd_simulate(cfg, ctx);
  if (cmd == "gain-map") return pontus::cmd_gain_map(cfg, ctx);
  if (cmd == "nm-measure") return pontus::cmd_nm_measure(cfg, ctx);
  if (cmd == "nm-boundary") return pontus::cmd_nm_boundary(cfg, ctx);
  return pontus::cmd_velocity_field(cfg, ctx);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Relaxation protocols and speed-up analysis for a driven, dissipative qubit"};
  app.require_subcommand(1);
  GlobalFlags g;
  app.add_option("--config", g.config, "JSON run configuration")->required()->check(CLI::ExistingFile);
  app.add_option("--output", g.output, "Output directory (overrides output.dir)");
  app.add_option("--epsilon", g.epsilon, "Trace-distance cutoff (default 1e-4)");
  app.add_option("--t-cap", g.t_cap, "Integration time cap");
  app.add_option("--jobs", g.jobs, "Sweep worker threads (default: available cores)");
  app.add_option("--seed", g.seed, "Reserved; computation is deterministic");
  app.fallthrough();

  bool with_baseline = false;
  app.add_subcommand("steady-state", "Attractors of the configured parameter points");
  auto* sim = app.add_subcommand("simulate", "Run the configured protocol");
  sim->add_flag("--with-baseline", with_baseline, "Also run the direct protocol and classify");
  app.add_subcommand("gain-map", "Gain over a (kappa, theta) or (kappa, omega) grid");
  app.add_subcommand("nm-measure", "Non-Markovianity measure at the configured (kappa, omega)");
  app.add_subcommand("nm-boundary", "Markov/non-Markov boundary over a kappa grid");
  app.add_subcommand("velocity-field", "Bloch-ball velocity field of one parameter point");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(pontus::ExitCode::Config);
  }
  return run(app.get_subcommands().front()->get_name(), g, with_baseline);
}
