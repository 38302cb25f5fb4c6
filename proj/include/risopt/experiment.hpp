// SPDX-License-Identifier: Apache-2.0
//
// Batch experiment layer: config file schema, CSV runners and the shared
// number formatting. Everything here is double precision; the templated
// core does the actual work.

#pragma once

#include "risopt/model.hpp"
#include "risopt/optim.hpp"
#include "risopt/simulate.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace risopt {

/// Phase-selection schemes a sweep can evaluate. The first three feed the
/// statistics-only bilinear precoder; None switches the RIS off entirely;
/// TtsElementwise keeps the element-wise phases on the slow timescale and
/// applies a per-realization matched filter.
enum class Algorithm { Pgd, Elementwise, Random, None, TtsElementwise };

/// Stable label used in config files and CSV output.
const char* algorithm_label(Algorithm algorithm);

/// Raised for unreadable, malformed or invalid configuration (and for
/// unwritable output locations, which are configuration in the same
/// sense). The message carries file, line and field where applicable.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  Scenario<double> scenario;
  std::vector<double> power_grid_db{0, 5, 10, 15, 20, 25, 30};
  int n_covariance_draws = 20;
  int n_realizations = 500;
  std::vector<Algorithm> algorithms{Algorithm::Pgd, Algorithm::Elementwise, Algorithm::Random,
                                    Algorithm::None, Algorithm::TtsElementwise};
  OptimizerConfig<double> optimizer;
  double convergence_distance = 20;  // meters; fixed instance for convergence runs
  std::string output_dir;
};

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b);

/// Full config validation; throws ConfigError naming the offending field.
void validate(const ExperimentConfig& config);

/// Parses and validates a config file. Section/key reference:
///   [scenario]   bs_antennas*, ris_elements*, sigma2, zeta2, bs_x, bs_y,
///                ris_x, ris_y, user_distance_min, user_distance_max,
///                scatterers_direct, scatterers_ris, pathloss_exponent, seed
///   [experiment] power_grid_db, covariance_draws, realizations,
///                algorithms, convergence_distance, output_dir
///   [optimizer]  max_iters, rel_tol, armijo_c, armijo_shrink,
///                armijo_init_step, max_backtracks, init, init_seed
/// Starred keys are required; everything else has defaults.
ExperimentConfig parse_config(const std::string& path);

/// Same parser over in-memory text; `origin` names the source in errors.
ExperimentConfig parse_config_text(std::string_view text, const std::string& origin);

/// Canonical text form; parse_config_text(serialize_config(c)) == c.
std::string serialize_config(const ExperimentConfig& config);

/// Shortest decimal string that round-trips to exactly `value`.
std::string format_shortest(double value);

/// Writes output_dir/convergence.csv: per selected iterative algorithm
/// (pgd, elementwise), the objective trace on one covariance instance
/// generated at convergence_distance. Header: algorithm,iteration,objective.
void run_convergence(const ExperimentConfig& config, int n_threads = 1);

/// Writes output_dir/rates.csv: for every power level and selected
/// algorithm, the Monte-Carlo mean rate pooled over the covariance draws.
/// Header: power_db,scheme,mean_rate,std_err,n. Output bytes depend only
/// on (config, scenario.seed), never on n_threads.
void run_rate_sweep(const ExperimentConfig& config, int n_threads = 1);

}  // namespace risopt
