#pragma once

// Experiment configuration in a flat key-value format:
//
//   base_seed = 42
//   workers = 4
//   out = results
//   envs = two_state, baird          (default: the four built-ins)
//   tune_seeds = 8
//   eval_seeds = 100
//   horizon.boyan = 20000            (default: the benchmark's own horizon)
//   grid.tdrc.alpha = 0.01, 0.03     (also .aux, .eta, .beta, .aux_cap)
//   robustness.alphas = 0.01, 0.1
//   robustness.seeds = 100
//
// '#' starts a comment. Unknown keys are errors.

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "batd/benchmarks.hpp"
#include "batd/harness.hpp"

namespace batd {

struct ConfigError : Error {
  using Error::Error;
};

struct GridOverride {
  std::optional<std::vector<double>> alpha, aux, eta, beta;
  std::optional<double> aux_cap;
};

struct ExperimentConfig {
  std::uint64_t base_seed = 42;
  std::size_t workers = 1;
  std::string out = "results";
  std::vector<std::string> envs = benchmarks::builtin_names();
  std::size_t tune_seeds = 8;
  std::size_t eval_seeds = 100;
  std::map<std::string, std::size_t> horizons;
  std::map<Algorithm, GridOverride> grids;
  std::vector<double> robustness_alphas = default_robustness_alphas();
  std::size_t robustness_seeds = 100;

  std::size_t horizon_for(const BenchmarkSpec& spec) const {
    const auto it = horizons.find(spec.name);
    return it == horizons.end() ? spec.default_horizon : it->second;
  }

  SweepGrid grid_for(Algorithm algo) const {
    SweepGrid g = default_grid(algo);
    const auto it = grids.find(algo);
    if (it == grids.end()) return g;
    const GridOverride& o = it->second;
    if (o.alpha) g.alpha = *o.alpha;
    if (o.aux) g.aux = *o.aux;
    if (o.eta) g.eta = *o.eta;
    if (o.beta) g.beta = *o.beta;
    if (o.aux_cap) g.aux_cap = *o.aux_cap;
    return g;
  }

  SweepSpec sweep_for(const BenchmarkSpec& spec, Algorithm algo) const {
    return {spec.name, algo, grid_for(algo), horizon_for(spec), tune_seeds, eval_seeds};
  }
};

namespace detail {

inline std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> out;
  std::string item;
  for (char c : text) {
    if (c == ',' || c == ' ' || c == '\t') {
      if (!item.empty()) out.push_back(std::move(item));
      item.clear();
    } else {
      item.push_back(c);
    }
  }
  if (!item.empty()) out.push_back(std::move(item));
  return out;
}

inline double parse_real(const std::string& tok, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(tok, &used);
    if (used == tok.size()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError("config line " + std::to_string(line) + ": bad number '" + tok + "'");
}

inline std::uint64_t parse_count(const std::string& tok, std::size_t line) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size())
    throw ConfigError("config line " + std::to_string(line) + ": bad integer '" + tok + "'");
  return v;
}

}  // namespace detail

inline ExperimentConfig parse_config_text(std::string_view text) {
  ExperimentConfig cfg;
  std::istringstream lines{std::string(text)};
  std::string raw;
  std::size_t n = 0;
  while (std::getline(lines, raw)) {
    ++n;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    const std::string line = detail::trim(raw);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(n) + ": missing '='");
    const std::string key = detail::trim(std::string_view(line).substr(0, eq));
    const std::string value = detail::trim(std::string_view(line).substr(eq + 1));
    const auto items = detail::split_list(value);
    auto one = [&]() -> const std::string& {
      if (items.size() != 1)
        throw ConfigError("config line " + std::to_string(n) + ": '" + key + "' takes one value");
      return items[0];
    };
    auto positive = [&]() {
      const auto v = detail::parse_count(one(), n);
      if (v == 0) throw ConfigError("config line " + std::to_string(n) + ": '" + key + "' must be >= 1");
      return static_cast<std::size_t>(v);
    };
    auto reals = [&]() {
      if (items.empty()) throw ConfigError("config line " + std::to_string(n) + ": empty list");
      std::vector<double> v;
      for (const auto& t : items) v.push_back(detail::parse_real(t, n));
      return v;
    };

    if (key == "base_seed") {
      cfg.base_seed = detail::parse_count(one(), n);
    } else if (key == "workers") {
      cfg.workers = positive();
    } else if (key == "out") {
      cfg.out = one();
    } else if (key == "envs") {
      if (items.empty()) throw ConfigError("config line " + std::to_string(n) + ": empty env list");
      cfg.envs = items;
    } else if (key == "tune_seeds") {
      cfg.tune_seeds = positive();
    } else if (key == "eval_seeds") {
      cfg.eval_seeds = positive();
      if (cfg.eval_seeds < 2) throw ConfigError("eval_seeds must be >= 2");
    } else if (key.rfind("horizon.", 0) == 0) {
      cfg.horizons[key.substr(8)] = positive();
    } else if (key.rfind("grid.", 0) == 0) {
      const auto dot = key.find('.', 5);
      if (dot == std::string::npos) throw ConfigError("config line " + std::to_string(n) + ": bad grid key");
      const auto algo = parse_algorithm(key.substr(5, dot - 5));
      if (!algo) throw ConfigError("config line " + std::to_string(n) + ": unknown algorithm in '" + key + "'");
      const std::string field = key.substr(dot + 1);
      GridOverride& o = cfg.grids[*algo];
      if (field == "alpha") o.alpha = reals();
      else if (field == "aux") o.aux = reals();
      else if (field == "eta") o.eta = reals();
      else if (field == "beta") o.beta = reals();
      else if (field == "aux_cap") o.aux_cap = detail::parse_real(one(), n);
      else throw ConfigError("config line " + std::to_string(n) + ": unknown grid field '" + field + "'");
    } else if (key == "robustness.alphas") {
      cfg.robustness_alphas = reals();
    } else if (key == "robustness.seeds") {
      cfg.robustness_seeds = positive();
      if (cfg.robustness_seeds < 2) throw ConfigError("robustness.seeds must be >= 2");
    } else {
      throw ConfigError("config line " + std::to_string(n) + ": unknown key '" + key + "'");
    }
  }
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

}  // namespace batd
