// SPDX-License-Identifier: Apache-2.0

#include "risopt/experiment.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace risopt {

namespace {

// Canonical output order for algorithms; rows are emitted in this order
// whatever the order in the config.
constexpr std::array<Algorithm, 5> kCanonicalOrder = {Algorithm::Pgd, Algorithm::Elementwise,
                                                      Algorithm::Random, Algorithm::None,
                                                      Algorithm::TtsElementwise};

bool selected(const ExperimentConfig& config, Algorithm algorithm) {
  for (const Algorithm a : config.algorithms) {
    if (a == algorithm) return true;
  }
  return false;
}

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

McScheme scheme_for(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::None: return McScheme::NoRis;
    case Algorithm::TtsElementwise: return McScheme::TtsMatchedFilter;
    default: return McScheme::BilinearStat;
  }
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream file(path, std::ios::binary);
  file << content;
  file.flush();
  if (!file) throw ConfigError(path.string() + ": cannot write output file");
}

void require_output_dir(const ExperimentConfig& config) {
  if (config.output_dir.empty()) {
    throw ConfigError("experiment.output_dir: no output directory configured");
  }
}

/// Per-draw state for a sweep: the covariance instance and every phase
/// vector the selected algorithms need. Phases do not depend on the
/// transmit power, so each is optimized exactly once per draw.
struct DrawData {
  StatisticalModel<double> model;
  std::optional<PhaseVector<double>> pgd;
  std::optional<PhaseVector<double>> elementwise;
  std::optional<PhaseVector<double>> random;
  std::optional<PhaseVector<double>> all_ones;
};

const PhaseVector<double>& phases_for(const DrawData& draw, Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::Pgd: return *draw.pgd;
    case Algorithm::Elementwise: return *draw.elementwise;
    case Algorithm::TtsElementwise: return *draw.elementwise;
    case Algorithm::Random: return *draw.random;
    case Algorithm::None: return *draw.all_ones;
  }
  throw std::invalid_argument("phases_for: unknown algorithm");
}

}  // namespace

void run_convergence(const ExperimentConfig& config, int n_threads) {
  (void)n_threads;  // a single instance; nothing worth parallelizing
  validate(config);
  require_output_dir(config);

  const StatisticalModel<double> model =
      generate_covariances(config.scenario, config.convergence_distance, 0);

  std::string csv = "algorithm,iteration,objective\n";
  for (const Algorithm algorithm : {Algorithm::Pgd, Algorithm::Elementwise}) {
    if (!selected(config, algorithm)) continue;
    const OptimizerReport<double> report = algorithm == Algorithm::Pgd
                                               ? optimize_pgd(model, config.optimizer)
                                               : optimize_elementwise(model, config.optimizer);
    for (std::size_t k = 0; k < report.objective_trace.size(); ++k) {
      csv += algorithm_label(algorithm);
      csv += ',';
      csv += std::to_string(k + 1);
      csv += ',';
      csv += format_shortest(report.objective_trace[k]);
      csv += '\n';
    }
  }
  write_file(std::filesystem::path(config.output_dir) / "convergence.csv", csv);
}

void run_rate_sweep(const ExperimentConfig& config, int n_threads) {
  validate(config);
  require_output_dir(config);

  const Scenario<double>& scenario = config.scenario;
  const Eigen::Index n_draws = config.n_covariance_draws;
  const bool need_pgd = selected(config, Algorithm::Pgd);
  const bool need_elementwise =
      selected(config, Algorithm::Elementwise) || selected(config, Algorithm::TtsElementwise);
  const bool need_random = selected(config, Algorithm::Random);

  // Stage 1: covariance draws and per-draw phase optimization.
  std::vector<DrawData> draws(static_cast<std::size_t>(n_draws));
  detail::parallel_for(n_draws, n_threads, [&](Eigen::Index begin, Eigen::Index end) {
    for (Eigen::Index d = begin; d < end; ++d) {
      auto& draw = draws[static_cast<std::size_t>(d)];
      auto distance_engine =
          substream_engine(scenario.seed, streams::distance, static_cast<std::uint64_t>(d));
      std::uniform_real_distribution<double> distance(scenario.user_distance_min,
                                                      scenario.user_distance_max);
      draw.model = generate_covariances(scenario, distance(distance_engine),
                                        static_cast<std::uint64_t>(d));
      draw.all_ones = PhaseVector<double>::all_ones(scenario.dims.ris_elements);
      if (need_pgd) draw.pgd = optimize_pgd(draw.model, config.optimizer).phi_final;
      if (need_elementwise) {
        draw.elementwise = optimize_elementwise(draw.model, config.optimizer).phi_final;
      }
      if (need_random) {
        draw.random = random_phases<double>(
            substream_seed(scenario.seed, streams::phases, static_cast<std::uint64_t>(d)),
            scenario.dims.ris_elements);
      }
    }
  });

  // Stage 2: one Monte-Carlo cell per (power, algorithm, draw). Cells run
  // in a parallel pool; each writes only its own slot. The rate substream
  // is keyed by the draw alone, so schemes and powers share realizations.
  std::vector<Algorithm> active;
  for (const Algorithm a : kCanonicalOrder) {
    if (selected(config, a)) active.push_back(a);
  }
  const Eigen::Index n_powers = static_cast<Eigen::Index>(config.power_grid_db.size());
  const Eigen::Index n_algs = static_cast<Eigen::Index>(active.size());
  const Eigen::Index n_cells = n_powers * n_algs * n_draws;
  std::vector<RateEstimate<double>> cells(static_cast<std::size_t>(n_cells));
  detail::parallel_for(n_cells, n_threads, [&](Eigen::Index begin, Eigen::Index end) {
    for (Eigen::Index cell = begin; cell < end; ++cell) {
      const Eigen::Index p = cell / (n_algs * n_draws);
      const Eigen::Index a = (cell / n_draws) % n_algs;
      const Eigen::Index d = cell % n_draws;
      const DrawData& draw = draws[static_cast<std::size_t>(d)];
      SystemDims<double> dims = scenario.dims;
      dims.tx_power = db_to_linear(config.power_grid_db[static_cast<std::size_t>(p)]);
      cells[static_cast<std::size_t>(cell)] = monte_carlo_rate(
          draw.model, phases_for(draw, active[static_cast<std::size_t>(a)]),
          scheme_for(active[static_cast<std::size_t>(a)]), dims, config.n_realizations,
          substream_seed(scenario.seed, streams::rate, static_cast<std::uint64_t>(d)),
          /*n_threads=*/1);
    }
  });

  // Stage 3: pool draws per (power, algorithm) and emit rows in fixed
  // order. With several draws the standard error is taken across the
  // draw means, which captures both sampling and covariance variability.
  std::string csv = "power_db,scheme,mean_rate,std_err,n\n";
  for (Eigen::Index p = 0; p < n_powers; ++p) {
    for (Eigen::Index a = 0; a < n_algs; ++a) {
      const auto cell_at = [&](Eigen::Index d) -> const RateEstimate<double>& {
        return cells[static_cast<std::size_t>((p * n_algs + a) * n_draws + d)];
      };
      double mean = 0;
      for (Eigen::Index d = 0; d < n_draws; ++d) mean += cell_at(d).mean_rate;
      mean /= static_cast<double>(n_draws);
      double std_err = cell_at(0).std_err;
      if (n_draws > 1) {
        double sq = 0;
        for (Eigen::Index d = 0; d < n_draws; ++d) {
          const double dev = cell_at(d).mean_rate - mean;
          sq += dev * dev;
        }
        std_err = std::sqrt(sq / (static_cast<double>(n_draws) * static_cast<double>(n_draws - 1)));
      }
      csv += format_shortest(config.power_grid_db[static_cast<std::size_t>(p)]);
      csv += ',';
      csv += algorithm_label(active[static_cast<std::size_t>(a)]);
      csv += ',';
      csv += format_shortest(mean);
      csv += ',';
      csv += format_shortest(std_err);
      csv += ',';
      csv += std::to_string(static_cast<long long>(n_draws) * config.n_realizations);
      csv += '\n';
    }
  }
  write_file(std::filesystem::path(config.output_dir) / "rates.csv", csv);
}

}  // namespace risopt
