// SPDX-License-Identifier: Apache-2.0
//
//   blockveil <scenario> --config <file> [--desk] [--seed S] [--threads T] [--out DIR]
#include <chrono>
#include <iostream>
#include <optional>

#include "CLI11.hpp"

#include "blockveil/config.hpp"
#include "blockveil/experiments.hpp"

int main(int argc, char** argv) {
  using namespace blockveil;
  CLI::App app{"Block-sparse private communication: simulations and eavesdropping experiments"};
  std::string scenario_name, config_path, out_dir;
  bool desk = false;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  std::optional<double> epsilon, rho, success_tol, feas_tol;
  std::optional<int> max_iterations;

  app.add_option("scenario", scenario_name,
                 "single-shot | moment-attack | ber-sweep | covariance-verify | coherence-report | hoeffding")
      ->required();
  app.add_option("--config", config_path, "key = value experiment file");
  app.add_flag("--desk", desk, "use the desk-scale preset for the scenario");
  app.add_option("--seed", seed, "master seed (overrides the config)");
  app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--out", out_dir, "output directory (overrides the config)");
  app.add_option("--epsilon", epsilon, "residual bound for noiseless problems");
  app.add_option("--max-iterations", max_iterations, "solver iteration cap");
  app.add_option("--rho", rho, "initial ADMM penalty");
  app.add_option("--success-tol", success_tol, "relative error counted as exact recovery");
  app.add_option("--feas-tol", feas_tol, "slack on the residual bound");
  CLI11_PARSE(app, argc, argv);

  try {
    const Scenario scenario = parse_scenario(scenario_name);
    ExperimentConfig cfg;
    if (!config_path.empty()) {
      cfg = load_config(config_path);
      if (cfg.scenario != scenario)
        throw ConfigError("config is for scenario '" + std::string(to_string(cfg.scenario)) + "', not '" +
                          scenario_name + "'");
    } else if (!desk) {
      throw ConfigError("--config is required unless --desk is given");
    }
    cfg.scenario = scenario;
    if (desk) apply_desk_preset(cfg);
    if (seed) cfg.master_seed = *seed;
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    if (epsilon) cfg.solver.epsilon = *epsilon;
    if (max_iterations) cfg.solver.max_iterations = *max_iterations;
    if (rho) cfg.solver.rho = *rho;
    if (success_tol) cfg.solver.success_tol = *success_tol;
    if (feas_tol) cfg.solver.feas_tol = *feas_tol;
    cfg.validate();

    const auto start = std::chrono::steady_clock::now();
    const auto out = run_experiment(cfg, threads);
    write_outputs(cfg, out, cfg.output_dir, threads);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << out.table.to_csv();
    std::cerr << "wrote " << cfg.output_dir << " (" << secs << " s)\n";
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
