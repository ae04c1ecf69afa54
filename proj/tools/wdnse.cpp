#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "wdnse/commands.hpp"

int main(int argc, char** argv)
{
  using namespace wdnse;
  CLI::App app{"Water distribution network state estimation"};
  app.require_subcommand(1);

  cli::EstimateManifest est;
  std::string objective = "wls";
  auto* estimate = app.add_subcommand("estimate", "estimate heads and flows from head-difference measurements");
  estimate->add_option("--network", est.network, "network in .inp format")->required();
  estimate->add_option("--measurements", est.measurements, "measurement JSON")->required();
  estimate->add_option("--out", est.out, "output directory")->required();
  estimate->add_option("--threshold", est.config.threshold, "convergence threshold on the iterate change")
      ->capture_default_str();
  estimate->add_option("--max-iter", est.config.max_iterations, "iteration cap")->capture_default_str();
  estimate->add_option("--step", est.config.acceleration_period, "acceleration period")->capture_default_str();
  estimate->add_option("--accel", est.config.acceleration_gain, "acceleration gain")->capture_default_str();
  estimate->add_option("--base", est.config.gp.base, "exponential base of the variable change")
      ->capture_default_str();
  estimate->add_option("--objective", objective, "wls or wabs")
      ->check(CLI::IsMember({"wls", "wabs"}))
      ->capture_default_str();
  estimate->add_option("--horizon", est.config.horizon, "number of time steps")->capture_default_str();

  cli::SimulateManifest sim;
  std::string sim_measurements;
  auto* simulate = app.add_subcommand("simulate", "solve the exact hydraulics (or the global SE reference)");
  simulate->add_option("--network", sim.network, "network in .inp format")->required();
  simulate->add_option("--measurements", sim_measurements, "measurement JSON (fixed heads, or SE data with --global)");
  simulate->add_option("--out", sim.out, "output directory")->required();
  simulate->add_flag("--global", sim.global, "multi-start SE reference instead of the hydraulic solve");
  simulate->add_option("--starts", sim.starts, "number of starts for --global")->capture_default_str();

  cli::CompareManifest cmp;
  auto* compare = app.add_subcommand("compare", "per-variable errors between two state files");
  compare->add_option("--estimate", cmp.estimate, "state.json")->required();
  compare->add_option("--truth", cmp.truth, "truth.json")->required();
  compare->add_option("--out", cmp.out, "output directory")->default_val(".");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::kExitError;
  }

  if (*estimate) {
    est.config.objective =
        objective == "wabs" ? ObjectiveKind::WeightedAbsolute : ObjectiveKind::WeightedLeastSquares;
    return cli::cmd_estimate(est, std::cerr);
  }
  if (*simulate) {
    if (!sim_measurements.empty()) sim.measurements = sim_measurements;
    try {
      sim.seed = cli::seed_from_env();
    } catch (const Error& e) {
      std::cerr << "error: " << e.what() << '\n';
      return cli::kExitError;
    }
    return cli::cmd_simulate(sim, std::cerr);
  }
  return cli::cmd_compare(cmp, std::cout, std::cerr);
}
