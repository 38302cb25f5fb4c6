// SPDX-License-Identifier: Apache-2.0

#include "risopt/experiment.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace risopt {

namespace {

constexpr std::array<Algorithm, 5> kAllAlgorithms = {Algorithm::Pgd, Algorithm::Elementwise,
                                                     Algorithm::Random, Algorithm::None,
                                                     Algorithm::TtsElementwise};

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split_list(std::string_view s) {
  std::vector<std::string_view> items;
  while (true) {
    const std::size_t comma = s.find(',');
    items.push_back(trim(s.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  return items;
}

/// Location-tagged failure helper; every parse error funnels through here.
[[noreturn]] void fail(const std::string& origin, int line, const std::string& message) {
  throw ConfigError(origin + ":" + std::to_string(line) + ": " + message);
}

double parse_double(std::string_view text, const std::string& origin, int line,
                    const std::string& field) {
  double value = 0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || std::isnan(value)) {
    fail(origin, line, field + ": expected a finite or -inf decimal value, got '" +
                           std::string(text) + "'");
  }
  return value;
}

template <typename Int>
Int parse_integer(std::string_view text, const std::string& origin, int line,
                  const std::string& field) {
  Int value = 0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    fail(origin, line, field + ": expected an integer, got '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace

const char* algorithm_label(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::Pgd: return "pgd";
    case Algorithm::Elementwise: return "elementwise";
    case Algorithm::Random: return "random";
    case Algorithm::None: return "none";
    case Algorithm::TtsElementwise: return "tts_elementwise";
  }
  throw std::invalid_argument("algorithm_label: unknown algorithm");
}

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
  return a.scenario == b.scenario && a.power_grid_db == b.power_grid_db &&
         a.n_covariance_draws == b.n_covariance_draws && a.n_realizations == b.n_realizations &&
         a.algorithms == b.algorithms && a.optimizer == b.optimizer &&
         a.convergence_distance == b.convergence_distance && a.output_dir == b.output_dir;
}

void validate(const ExperimentConfig& config) {
  try {
    validate(config.scenario);
    validate(config.optimizer);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (config.power_grid_db.empty()) {
    throw ConfigError("experiment.power_grid_db: must not be empty");
  }
  for (const double db : config.power_grid_db) {
    if (std::isnan(db) || db == std::numeric_limits<double>::infinity()) {
      throw ConfigError("experiment.power_grid_db: entries must be finite or -inf");
    }
  }
  if (config.n_covariance_draws < 1) {
    throw ConfigError("experiment.covariance_draws: must be >= 1");
  }
  if (config.n_realizations < 1) {
    throw ConfigError("experiment.realizations: must be >= 1");
  }
  if (config.algorithms.empty()) {
    throw ConfigError("experiment.algorithms: must not be empty");
  }
  std::set<Algorithm> seen;
  for (const Algorithm a : config.algorithms) {
    if (!seen.insert(a).second) {
      throw ConfigError(std::string("experiment.algorithms: duplicate entry '") +
                        algorithm_label(a) + "'");
    }
  }
  if (!(config.convergence_distance >= config.scenario.user_distance_min &&
        config.convergence_distance <= config.scenario.user_distance_max)) {
    throw ConfigError("experiment.convergence_distance: outside the user distance range");
  }
}

ExperimentConfig parse_config_text(std::string_view text, const std::string& origin) {
  ExperimentConfig config;
  enum class Section { NoneYet, Scenario, Experiment, Optimizer };
  Section section = Section::NoneYet;
  std::set<std::string> seen_keys;
  bool seen_bs_antennas = false;
  bool seen_ris_elements = false;

  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t eol = text.find('\n', pos);
    std::string_view line =
        text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    ++line_no;

    line = trim(line);
    if (line.empty() || line.front() == '#' || line.front() == ';') continue;

    if (line.front() == '[') {
      if (line.back() != ']') fail(origin, line_no, "unterminated section header");
      const std::string_view name = trim(line.substr(1, line.size() - 2));
      if (name == "scenario") section = Section::Scenario;
      else if (name == "experiment") section = Section::Experiment;
      else if (name == "optimizer") section = Section::Optimizer;
      else fail(origin, line_no, "unknown section '[" + std::string(name) + "]'");
      continue;
    }

    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      fail(origin, line_no, "expected 'key = value', got '" + std::string(line) + "'");
    }
    const std::string key{trim(line.substr(0, eq))};
    const std::string_view value = trim(line.substr(eq + 1));
    if (key.empty()) fail(origin, line_no, "empty key");
    if (value.empty()) fail(origin, line_no, key + ": empty value");
    if (section == Section::NoneYet) {
      fail(origin, line_no, key + ": key appears before any [section] header");
    }

    const std::string section_name = section == Section::Scenario     ? "scenario"
                                     : section == Section::Experiment ? "experiment"
                                                                      : "optimizer";
    const std::string field = section_name + "." + key;
    if (!seen_keys.insert(field).second) {
      fail(origin, line_no, field + ": duplicate key");
    }

    auto as_double = [&] { return parse_double(value, origin, line_no, field); };
    auto as_int = [&] { return parse_integer<int>(value, origin, line_no, field); };
    auto as_u64 = [&] { return parse_integer<std::uint64_t>(value, origin, line_no, field); };

    if (section == Section::Scenario) {
      auto& sc = config.scenario;
      if (key == "bs_antennas") {
        sc.dims.bs_antennas = as_int();
        seen_bs_antennas = true;
      } else if (key == "ris_elements") {
        sc.dims.ris_elements = as_int();
        seen_ris_elements = true;
      } else if (key == "sigma2") sc.dims.noise_var = as_double();
      else if (key == "zeta2") sc.dims.obs_noise_var = as_double();
      else if (key == "bs_x") sc.bs_pos.x() = as_double();
      else if (key == "bs_y") sc.bs_pos.y() = as_double();
      else if (key == "ris_x") sc.ris_pos.x() = as_double();
      else if (key == "ris_y") sc.ris_pos.y() = as_double();
      else if (key == "user_distance_min") sc.user_distance_min = as_double();
      else if (key == "user_distance_max") sc.user_distance_max = as_double();
      else if (key == "scatterers_direct") sc.n_scatterers_direct = as_int();
      else if (key == "scatterers_ris") sc.n_scatterers_ris = as_int();
      else if (key == "pathloss_exponent") sc.pathloss_exponent = as_double();
      else if (key == "seed") sc.seed = as_u64();
      else fail(origin, line_no, field + ": unknown key");
    } else if (section == Section::Experiment) {
      if (key == "power_grid_db") {
        config.power_grid_db.clear();
        for (const std::string_view item : split_list(value)) {
          if (item.empty()) fail(origin, line_no, field + ": empty list entry");
          config.power_grid_db.push_back(parse_double(item, origin, line_no, field));
        }
      } else if (key == "covariance_draws") config.n_covariance_draws = as_int();
      else if (key == "realizations") config.n_realizations = as_int();
      else if (key == "algorithms") {
        config.algorithms.clear();
        for (const std::string_view item : split_list(value)) {
          bool found = false;
          for (const Algorithm a : kAllAlgorithms) {
            if (item == algorithm_label(a)) {
              config.algorithms.push_back(a);
              found = true;
              break;
            }
          }
          if (!found) {
            fail(origin, line_no, field + ": unknown algorithm '" + std::string(item) + "'");
          }
        }
      } else if (key == "convergence_distance") config.convergence_distance = as_double();
      else if (key == "output_dir") config.output_dir = std::string(value);
      else fail(origin, line_no, field + ": unknown key");
    } else {
      auto& opt = config.optimizer;
      if (key == "max_iters") opt.max_iters = as_int();
      else if (key == "rel_tol") opt.rel_tol = as_double();
      else if (key == "armijo_c") opt.armijo_c = as_double();
      else if (key == "armijo_shrink") opt.armijo_shrink = as_double();
      else if (key == "armijo_init_step") opt.armijo_init_step = as_double();
      else if (key == "max_backtracks") opt.max_backtracks = as_int();
      else if (key == "init") {
        if (value == "all_ones") opt.init = PhaseInit::AllOnes;
        else if (value == "random") opt.init = PhaseInit::Random;
        else fail(origin, line_no, field + ": expected 'all_ones' or 'random'");
      } else if (key == "init_seed") opt.init_seed = as_u64();
      else fail(origin, line_no, field + ": unknown key");
    }
  }

  if (!seen_bs_antennas) throw ConfigError(origin + ": missing required key scenario.bs_antennas");
  if (!seen_ris_elements) {
    throw ConfigError(origin + ": missing required key scenario.ris_elements");
  }
  validate(config);
  return config;
}

ExperimentConfig parse_config(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw ConfigError(path + ": cannot open config file");
  std::ostringstream buffer;
  buffer << file.rdbuf();
  return parse_config_text(buffer.str(), path);
}

std::string format_shortest(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw std::runtime_error("format_shortest: conversion failed");
  return std::string(buf, ptr);
}

std::string serialize_config(const ExperimentConfig& config) {
  const auto& sc = config.scenario;
  std::string out;
  auto line = [&out](const std::string& key, const std::string& value) {
    out += key;
    out += " = ";
    out += value;
    out += '\n';
  };
  out += "[scenario]\n";
  line("bs_antennas", std::to_string(sc.dims.bs_antennas));
  line("ris_elements", std::to_string(sc.dims.ris_elements));
  line("sigma2", format_shortest(sc.dims.noise_var));
  line("zeta2", format_shortest(sc.dims.obs_noise_var));
  line("bs_x", format_shortest(sc.bs_pos.x()));
  line("bs_y", format_shortest(sc.bs_pos.y()));
  line("ris_x", format_shortest(sc.ris_pos.x()));
  line("ris_y", format_shortest(sc.ris_pos.y()));
  line("user_distance_min", format_shortest(sc.user_distance_min));
  line("user_distance_max", format_shortest(sc.user_distance_max));
  line("scatterers_direct", std::to_string(sc.n_scatterers_direct));
  line("scatterers_ris", std::to_string(sc.n_scatterers_ris));
  line("pathloss_exponent", format_shortest(sc.pathloss_exponent));
  line("seed", std::to_string(sc.seed));
  out += "\n[experiment]\n";
  std::string grid;
  for (std::size_t i = 0; i < config.power_grid_db.size(); ++i) {
    if (i > 0) grid += ',';
    grid += format_shortest(config.power_grid_db[i]);
  }
  line("power_grid_db", grid);
  line("covariance_draws", std::to_string(config.n_covariance_draws));
  line("realizations", std::to_string(config.n_realizations));
  std::string algs;
  for (std::size_t i = 0; i < config.algorithms.size(); ++i) {
    if (i > 0) algs += ',';
    algs += algorithm_label(config.algorithms[i]);
  }
  line("algorithms", algs);
  line("convergence_distance", format_shortest(config.convergence_distance));
  if (!config.output_dir.empty()) line("output_dir", config.output_dir);
  out += "\n[optimizer]\n";
  const auto& opt = config.optimizer;
  line("max_iters", std::to_string(opt.max_iters));
  line("rel_tol", format_shortest(opt.rel_tol));
  line("armijo_c", format_shortest(opt.armijo_c));
  line("armijo_shrink", format_shortest(opt.armijo_shrink));
  line("armijo_init_step", format_shortest(opt.armijo_init_step));
  line("max_backtracks", std::to_string(opt.max_backtracks));
  line("init", opt.init == PhaseInit::AllOnes ? "all_ones" : "random");
  line("init_seed", std::to_string(opt.init_seed));
  return out;
}

}  // namespace risopt
