// SPDX-License-Identifier: Apache-2.0
//
// Config parsing, serialization round-trips, number formatting and the
// two CSV runners (convergence trace and rate sweep).

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <risopt/experiment.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace risopt;

namespace {

const std::string kMinimal = "[scenario]\nbs_antennas = 4\nris_elements = 8\n";

std::string read_file(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  REQUIRE(static_cast<bool>(file));
  std::ostringstream buffer;
  buffer << file.rdbuf();
  return buffer.str();
}

std::filesystem::path fresh_dir(const std::string& name) {
  const std::filesystem::path dir = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    std::vector<std::string> fields;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) fields.push_back(cell);
    rows.push_back(std::move(fields));
  }
  return rows;
}

/// Small deployment that keeps runner tests fast.
ExperimentConfig tiny_config(const std::string& out_dir) {
  ExperimentConfig config;
  config.scenario.dims.bs_antennas = 2;
  config.scenario.dims.ris_elements = 3;
  config.scenario.n_scatterers_direct = 2;
  config.scenario.n_scatterers_ris = 2;
  config.scenario.seed = 7;
  config.power_grid_db = {-std::numeric_limits<double>::infinity(), 10};
  config.n_covariance_draws = 2;
  config.n_realizations = 40;
  config.output_dir = out_dir;
  return config;
}

}  // namespace

TEST_CASE("algorithm labels are stable") {
  CHECK(std::string(algorithm_label(Algorithm::Pgd)) == "pgd");
  CHECK(std::string(algorithm_label(Algorithm::Elementwise)) == "elementwise");
  CHECK(std::string(algorithm_label(Algorithm::Random)) == "random");
  CHECK(std::string(algorithm_label(Algorithm::None)) == "none");
  CHECK(std::string(algorithm_label(Algorithm::TtsElementwise)) == "tts_elementwise");
}

TEST_CASE("minimal config fills every default") {
  const ExperimentConfig config = parse_config_text(kMinimal, "cfg");
  const auto& sc = config.scenario;
  CHECK(sc.dims.bs_antennas == 4);
  CHECK(sc.dims.ris_elements == 8);
  CHECK(sc.dims.noise_var == 1.0);
  CHECK(sc.dims.obs_noise_var == 1.0);
  CHECK(sc.dims.tx_power == 1.0);
  CHECK(sc.bs_pos.x() == 0.0);
  CHECK(sc.bs_pos.y() == 0.0);
  CHECK(sc.ris_pos.x() == 50.0);
  CHECK(sc.ris_pos.y() == 10.0);
  CHECK(sc.user_distance_min == 15.0);
  CHECK(sc.user_distance_max == 60.0);
  CHECK(sc.n_scatterers_direct == 6);
  CHECK(sc.n_scatterers_ris == 6);
  CHECK(sc.pathloss_exponent == 2.6);
  CHECK(sc.seed == 1);

  CHECK(config.power_grid_db == std::vector<double>{0, 5, 10, 15, 20, 25, 30});
  CHECK(config.n_covariance_draws == 20);
  CHECK(config.n_realizations == 500);
  CHECK(config.algorithms ==
        std::vector<Algorithm>{Algorithm::Pgd, Algorithm::Elementwise, Algorithm::Random,
                               Algorithm::None, Algorithm::TtsElementwise});
  CHECK(config.convergence_distance == 20.0);
  CHECK(config.output_dir.empty());

  const auto& opt = config.optimizer;
  CHECK(opt.max_iters == 100);
  CHECK(opt.rel_tol == 1e-8);
  CHECK(opt.armijo_c == 1e-4);
  CHECK(opt.armijo_shrink == 0.5);
  CHECK(opt.armijo_init_step == 1.0);
  CHECK(opt.max_backtracks == 40);
  CHECK(opt.init == PhaseInit::AllOnes);
  CHECK(opt.init_seed == 0);
}

TEST_CASE("parser accepts comments, blank lines and CRLF endings") {
  const std::string text =
      "# leading comment\r\n"
      "\r\n"
      "[scenario]\r\n"
      "bs_antennas = 4   \r\n"
      "; another comment style\r\n"
      "  ris_elements=8\r\n"
      "seed = 42\r\n";
  const ExperimentConfig config = parse_config_text(text, "cfg");
  CHECK(config.scenario.dims.bs_antennas == 4);
  CHECK(config.scenario.dims.ris_elements == 8);
  CHECK(config.scenario.seed == 42);
}

TEST_CASE("parse errors carry origin, line and field") {
  SUBCASE("key before any section") {
    CHECK_THROWS_WITH_AS(parse_config_text("x = 1\n", "cfg"),
                         "cfg:1: x: key appears before any [section] header", ConfigError);
  }
  SUBCASE("unknown section") {
    CHECK_THROWS_WITH_AS(parse_config_text("[scenario]\n[weird]\n", "cfg"),
                         "cfg:2: unknown section '[weird]'", ConfigError);
  }
  SUBCASE("unterminated section header") {
    CHECK_THROWS_WITH_AS(parse_config_text("[scenario\n", "cfg"),
                         "cfg:1: unterminated section header", ConfigError);
  }
  SUBCASE("missing equals sign") {
    CHECK_THROWS_WITH_AS(parse_config_text("[scenario]\nbs_antennas 4\n", "cfg"),
                         "cfg:2: expected 'key = value', got 'bs_antennas 4'", ConfigError);
  }
  SUBCASE("empty value") {
    CHECK_THROWS_WITH_AS(parse_config_text("[scenario]\nsigma2 =\n", "cfg"),
                         "cfg:2: sigma2: empty value", ConfigError);
  }
  SUBCASE("duplicate key") {
    CHECK_THROWS_WITH_AS(
        parse_config_text("[scenario]\nsigma2 = 1\nsigma2 = 2\n", "cfg"),
        "cfg:3: scenario.sigma2: duplicate key", ConfigError);
  }
  SUBCASE("unknown key names its section") {
    CHECK_THROWS_WITH_AS(parse_config_text("[scenario]\nbogus = 1\n", "cfg"),
                         "cfg:2: scenario.bogus: unknown key", ConfigError);
    CHECK_THROWS_WITH_AS(parse_config_text(kMinimal + "[experiment]\ntx_power = 3\n", "cfg"),
                         "cfg:5: experiment.tx_power: unknown key", ConfigError);
  }
  SUBCASE("malformed numbers") {
    CHECK_THROWS_WITH_AS(
        parse_config_text("[scenario]\nsigma2 = abc\n", "cfg"),
        "cfg:2: scenario.sigma2: expected a finite or -inf decimal value, got 'abc'", ConfigError);
    CHECK_THROWS_WITH_AS(parse_config_text("[scenario]\nbs_antennas = 4.5\n", "cfg"),
                         "cfg:2: scenario.bs_antennas: expected an integer, got '4.5'",
                         ConfigError);
  }
  SUBCASE("nan is rejected at parse time") {
    CHECK_THROWS_WITH_AS(
        parse_config_text(kMinimal + "[experiment]\npower_grid_db = 0,nan\n", "cfg"),
        "cfg:5: experiment.power_grid_db: expected a finite or -inf decimal value, got 'nan'",
        ConfigError);
  }
  SUBCASE("empty list entry") {
    CHECK_THROWS_WITH_AS(
        parse_config_text(kMinimal + "[experiment]\npower_grid_db = 1,,2\n", "cfg"),
        "cfg:5: experiment.power_grid_db: empty list entry", ConfigError);
  }
  SUBCASE("unknown algorithm") {
    CHECK_THROWS_WITH_AS(
        parse_config_text(kMinimal + "[experiment]\nalgorithms = pgd,sdp\n", "cfg"),
        "cfg:5: experiment.algorithms: unknown algorithm 'sdp'", ConfigError);
  }
  SUBCASE("bad init keyword") {
    CHECK_THROWS_WITH_AS(
        parse_config_text(kMinimal + "[optimizer]\ninit = zeros\n", "cfg"),
        "cfg:5: optimizer.init: expected 'all_ones' or 'random'", ConfigError);
  }
  SUBCASE("missing required keys") {
    CHECK_THROWS_WITH_AS(parse_config_text("[scenario]\nris_elements = 8\n", "cfg"),
                         "cfg: missing required key scenario.bs_antennas", ConfigError);
    CHECK_THROWS_WITH_AS(parse_config_text("[scenario]\nbs_antennas = 4\n", "cfg"),
                         "cfg: missing required key scenario.ris_elements", ConfigError);
  }
  SUBCASE("unreadable file path") {
    CHECK_THROWS_AS(parse_config("/definitely/not/here.ini"), ConfigError);
  }
}

TEST_CASE("validation failures name the offending field") {
  SUBCASE("non-positive dimensions") {
    CHECK_THROWS_WITH_AS(
        parse_config_text("[scenario]\nbs_antennas = 4\nris_elements = -2\n", "cfg"),
        "SystemDims: ris_elements must be >= 1", ConfigError);
  }
  SUBCASE("bad distance range") {
    CHECK_THROWS_WITH_AS(
        parse_config_text(kMinimal + "user_distance_min = 50\nuser_distance_max = 20\n"
                                     "[experiment]\nconvergence_distance = 30\n",
                          "cfg"),
        "Scenario: user distance range must satisfy 0 < min <= max", ConfigError);
  }
  SUBCASE("positive infinity in the power grid") {
    CHECK_THROWS_WITH_AS(
        parse_config_text(kMinimal + "[experiment]\npower_grid_db = 0,inf\n", "cfg"),
        "experiment.power_grid_db: entries must be finite or -inf", ConfigError);
  }
  SUBCASE("duplicate algorithm selection") {
    CHECK_THROWS_WITH_AS(
        parse_config_text(kMinimal + "[experiment]\nalgorithms = pgd,none,pgd\n", "cfg"),
        "experiment.algorithms: duplicate entry 'pgd'", ConfigError);
  }
  SUBCASE("counts must be at least one") {
    CHECK_THROWS_WITH_AS(
        parse_config_text(kMinimal + "[experiment]\ncovariance_draws = 0\n", "cfg"),
        "experiment.covariance_draws: must be >= 1", ConfigError);
    CHECK_THROWS_WITH_AS(
        parse_config_text(kMinimal + "[experiment]\nrealizations = -3\n", "cfg"),
        "experiment.realizations: must be >= 1", ConfigError);
  }
  SUBCASE("convergence distance must lie in the sampled range") {
    CHECK_THROWS_WITH_AS(
        parse_config_text(kMinimal + "[experiment]\nconvergence_distance = 5\n", "cfg"),
        "experiment.convergence_distance: outside the user distance range", ConfigError);
  }
  SUBCASE("fields only reachable through the struct") {
    ExperimentConfig config = parse_config_text(kMinimal, "cfg");
    config.algorithms.clear();
    CHECK_THROWS_WITH_AS(validate(config), "experiment.algorithms: must not be empty",
                         ConfigError);
    config = parse_config_text(kMinimal, "cfg");
    config.power_grid_db.clear();
    CHECK_THROWS_WITH_AS(validate(config), "experiment.power_grid_db: must not be empty",
                         ConfigError);
    config = parse_config_text(kMinimal, "cfg");
    config.power_grid_db = {std::nan("")};
    CHECK_THROWS_WITH_AS(validate(config), "experiment.power_grid_db: entries must be finite or -inf",
                         ConfigError);
  }
}

TEST_CASE("serialize and parse round-trip") {
  SUBCASE("defaults") {
    const ExperimentConfig config = parse_config_text(kMinimal, "cfg");
    CHECK(parse_config_text(serialize_config(config), "round") == config);
  }
  SUBCASE("assorted explicit settings") {
    ExperimentConfig config = parse_config_text(kMinimal, "cfg");
    config.scenario.dims.noise_var = 0.125;
    config.scenario.dims.obs_noise_var = 2.5;
    config.scenario.bs_pos << -3.5, 1.25;
    config.scenario.ris_pos << 47.5, 9.875;
    config.scenario.user_distance_min = 10.5;
    config.scenario.user_distance_max = 80.25;
    config.scenario.n_scatterers_direct = 3;
    config.scenario.n_scatterers_ris = 9;
    config.scenario.pathloss_exponent = 2.6;
    config.scenario.seed = 18446744073709551615ULL;
    config.power_grid_db = {-std::numeric_limits<double>::infinity(), -2.5, 0.1, 33.3};
    config.n_covariance_draws = 7;
    config.n_realizations = 123;
    config.algorithms = {Algorithm::TtsElementwise, Algorithm::None, Algorithm::Pgd};
    config.optimizer.max_iters = 55;
    config.optimizer.rel_tol = 3e-7;
    config.optimizer.armijo_c = 0.02;
    config.optimizer.armijo_shrink = 0.25;
    config.optimizer.armijo_init_step = 0.75;
    config.optimizer.max_backtracks = 11;
    config.optimizer.init = PhaseInit::Random;
    config.optimizer.init_seed = 314159;
    config.convergence_distance = 33.75;
    config.output_dir = "out/sub dir";
    validate(config);
    CHECK(parse_config_text(serialize_config(config), "round") == config);
  }
  SUBCASE("random values survive the text form") {
    std::mt19937_64 engine(2024);
    std::uniform_real_distribution<double> mantissa(-1, 1);
    std::uniform_int_distribution<int> exponent(-12, 12);
    for (int k = 0; k < 50; ++k) {
      ExperimentConfig config = parse_config_text(kMinimal, "cfg");
      config.scenario.dims.noise_var = std::abs(mantissa(engine)) *
                                           std::pow(10.0, exponent(engine)) +
                                       1e-300;
      config.scenario.seed = engine();
      config.power_grid_db = {mantissa(engine) * 40, mantissa(engine) * 40};
      config.convergence_distance = 15 + 45 * std::abs(mantissa(engine));
      validate(config);
      CHECK(parse_config_text(serialize_config(config), "round") == config);
    }
  }
}

TEST_CASE("format_shortest prints shortest round-trip decimals") {
  CHECK(format_shortest(1.0) == "1");
  CHECK(format_shortest(0.5) == "0.5");
  CHECK(format_shortest(2.6) == "2.6");
  CHECK(format_shortest(-0.0078125) == "-0.0078125");
  CHECK(format_shortest(1e100) == "1e+100");
  CHECK(format_shortest(-std::numeric_limits<double>::infinity()) == "-inf");
  CHECK(format_shortest(0.1 + 0.2) == "0.30000000000000004");

  std::mt19937_64 engine(99);
  std::uniform_real_distribution<double> mantissa(-1, 1);
  std::uniform_int_distribution<int> exponent(-300, 300);
  for (int k = 0; k < 2000; ++k) {
    const double value = mantissa(engine) * std::pow(10.0, exponent(engine));
    const std::string text = format_shortest(value);
    CHECK(std::strtod(text.c_str(), nullptr) == value);
  }
}

TEST_CASE("run_convergence writes the trace CSV") {
  const std::filesystem::path dir = fresh_dir("risopt_conv_test");
  ExperimentConfig config = tiny_config((dir / "a").string());
  config.scenario.dims.ris_elements = 4;

  SUBCASE("single algorithm selection") {
    config.algorithms = {Algorithm::Pgd};
    run_convergence(config);
    const auto rows = parse_csv(read_file(dir / "a" / "convergence.csv"));
    REQUIRE(rows.size() >= 2);
    CHECK(rows[0] == std::vector<std::string>{"algorithm", "iteration", "objective"});
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < rows.size(); ++k) {
      REQUIRE(rows[k].size() == 3);
      CHECK(rows[k][0] == "pgd");
      CHECK(rows[k][1] == std::to_string(k));
      const double objective = std::strtod(rows[k][2].c_str(), nullptr);
      CHECK(objective <= prev);
      prev = objective;
    }
  }

  SUBCASE("both iterative algorithms start from the same objective") {
    config.algorithms = {Algorithm::Elementwise, Algorithm::Pgd, Algorithm::None};
    run_convergence(config);
    const auto rows = parse_csv(read_file(dir / "a" / "convergence.csv"));
    std::string first_pgd;
    std::string first_elementwise;
    // pgd rows come first whatever the config order; none is not iterative
    // and contributes no rows.
    for (std::size_t k = 1; k < rows.size(); ++k) {
      if (rows[k][1] != "1") continue;
      if (rows[k][0] == "pgd") first_pgd = rows[k][2];
      if (rows[k][0] == "elementwise") first_elementwise = rows[k][2];
    }
    REQUIRE(!first_pgd.empty());
    REQUIRE(!first_elementwise.empty());
    CHECK(first_pgd == first_elementwise);
    CHECK(rows[1][0] == "pgd");
    CHECK(rows.back()[0] == "elementwise");
  }

  SUBCASE("reruns are byte-identical") {
    run_convergence(config, 1);
    const std::string once = read_file(dir / "a" / "convergence.csv");
    run_convergence(config, 3);
    CHECK(read_file(dir / "a" / "convergence.csv") == once);
  }

  SUBCASE("missing output directory setting") {
    config.output_dir.clear();
    CHECK_THROWS_WITH_AS(run_convergence(config),
                         "experiment.output_dir: no output directory configured", ConfigError);
  }
}

TEST_CASE("run_rate_sweep writes the pooled rate CSV") {
  const std::filesystem::path dir = fresh_dir("risopt_sweep_test");
  ExperimentConfig config = tiny_config((dir / "a").string());

  run_rate_sweep(config);
  const std::string text = read_file(dir / "a" / "rates.csv");
  const auto rows = parse_csv(text);
  REQUIRE(rows.size() == 1 + 2 * 5);
  CHECK(rows[0] == std::vector<std::string>{"power_db", "scheme", "mean_rate", "std_err", "n"});

  SUBCASE("rows follow config power order and canonical scheme order") {
    const std::vector<std::string> schemes = {"pgd", "elementwise", "random", "none",
                                              "tts_elementwise"};
    for (int p = 0; p < 2; ++p) {
      for (int a = 0; a < 5; ++a) {
        const auto& row = rows[static_cast<std::size_t>(1 + p * 5 + a)];
        REQUIRE(row.size() == 5);
        CHECK(row[0] == (p == 0 ? "-inf" : "10"));
        CHECK(row[1] == schemes[static_cast<std::size_t>(a)]);
        CHECK(row[4] == "80");
      }
    }
  }

  SUBCASE("zero transmit power rows report exactly zero rate") {
    for (int a = 0; a < 5; ++a) {
      const auto& row = rows[static_cast<std::size_t>(1 + a)];
      CHECK(row[2] == "0");
      CHECK(row[3] == "0");
    }
    for (int a = 0; a < 5; ++a) {
      const auto& row = rows[static_cast<std::size_t>(1 + 5 + a)];
      CHECK(std::strtod(row[2].c_str(), nullptr) > 0);
    }
  }

  SUBCASE("thread count never changes the bytes") {
    run_rate_sweep(config, 4);
    CHECK(read_file(dir / "a" / "rates.csv") == text);
    run_rate_sweep(config, 3);
    CHECK(read_file(dir / "a" / "rates.csv") == text);
  }

  SUBCASE("shared rows do not depend on which other schemes run") {
    auto none_rows = [&](const std::string& csv) {
      std::string picked;
      for (const auto& row : parse_csv(csv)) {
        if (row.size() == 5 && row[1] == "none") {
          picked += row[0] + "," + row[2] + "," + row[3] + "," + row[4] + "\n";
        }
      }
      return picked;
    };
    ExperimentConfig left = config;
    left.algorithms = {Algorithm::Pgd, Algorithm::None};
    left.output_dir = (dir / "left").string();
    run_rate_sweep(left);
    ExperimentConfig right = config;
    right.algorithms = {Algorithm::None, Algorithm::Elementwise};
    right.output_dir = (dir / "right").string();
    run_rate_sweep(right);
    const std::string left_rows = none_rows(read_file(dir / "left" / "rates.csv"));
    CHECK(left_rows == none_rows(read_file(dir / "right" / "rates.csv")));
    CHECK(left_rows == none_rows(text));
  }

  SUBCASE("unwritable output location raises a config error") {
    const std::filesystem::path blocker = dir / "blocker";
    std::ofstream(blocker) << "not a directory";
    ExperimentConfig bad = config;
    bad.output_dir = (blocker / "sub").string();
    CHECK_THROWS_AS(run_rate_sweep(bad), ConfigError);
  }
}
