// SPDX-License-Identifier: Apache-2.0
//
// Experiment runner. Exit codes: 0 success, 2 configuration error,
// 3 numerical failure (a required matrix inverse was rejected).

#include "risopt/experiment.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <exception>
#include <string>

int main(int argc, char** argv) {
  CLI::App app{"RIS-aided MISO link-level experiments"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run an experiment described by a config file");
  std::string mode;
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  int n_threads = 0;
  run->add_option("--mode", mode, "experiment mode")
      ->required()
      ->check(CLI::IsMember({"convergence", "sweep"}));
  run->add_option("--config", config_path, "experiment config file")->required();
  run->add_option("--seed", seed, "root RNG seed; overrides the config's scenario seed")
      ->required();
  run->add_option("--out", out_dir, "output directory for CSV artifacts")->required();
  run->add_option("--threads", n_threads,
                  "worker threads; 0 means hardware concurrency (results do not depend on this)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    risopt::ExperimentConfig config = risopt::parse_config(config_path);
    config.scenario.seed = seed;
    config.output_dir = out_dir;
    if (mode == "convergence") {
      risopt::run_convergence(config, n_threads);
    } else {
      risopt::run_rate_sweep(config, n_threads);
    }
  } catch (const risopt::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const risopt::SingularMatrixError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
