// Copyright 2026 The qmsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "qmsim/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "qmsim/block_dynamics.hpp"
#include "qmsim/rng.hpp"

namespace qmsim {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

[[noreturn]] void bad_key(const std::string& where) {
  throw ConfigError("config error: unknown key '" + where + "'");
}

double parse_double_value(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const double v = std::strtod(value.c_str(), &end);
  if (end == value.c_str() || *end != '\0' || !std::isfinite(v))
    throw ConfigError("config error: key '" + key + "' has non-numeric value '" +
                      value + "'");
  return v;
}

long long parse_int_value(const std::string& key, const std::string& value) {
  long long v = 0;
  const auto [ptr, ec] =
      std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size())
    throw ConfigError("config error: key '" + key + "' has non-integer value '" +
                      value + "'");
  return v;
}

std::uint64_t parse_u64_value(const std::string& key, const std::string& value) {
  std::uint64_t v = 0;
  const auto [ptr, ec] =
      std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size())
    throw ConfigError("config error: key '" + key + "' has non-integer value '" +
                      value + "'");
  return v;
}

std::vector<Index> parse_list_value(const std::string& key, const std::string& value) {
  std::vector<Index> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    out.push_back(static_cast<Index>(parse_int_value(key, item)));
  }
  return out;
}

void apply_key(ExperimentConfig& cfg, const std::string& section,
               const std::string& key, const std::string& value) {
  const std::string where = section + "." + key;
  if (section == "experiment") {
    if (key == "scenario") cfg.scenario = value;
    else if (key == "seed") cfg.seed = parse_u64_value(where, value);
    else if (key == "out_dir") cfg.out_dir = value;
    else bad_key(where);
  } else if (section == "model") {
    if (key == "apparatus") cfg.apparatus = value;
    else if (key == "d_s") cfg.d_s = static_cast<Index>(parse_int_value(where, value));
    else if (key == "n_out") cfg.n_out = static_cast<Index>(parse_int_value(where, value));
    else if (key == "initial_system") cfg.initial_system = value;
    else if (key == "system_energy") cfg.system_energy = value;
    else if (key == "sector_levels")
      cfg.sector_levels = static_cast<Index>(parse_int_value(where, value));
    else if (key == "subunits")
      cfg.subunits = static_cast<Index>(parse_int_value(where, value));
    else if (key == "coupling_lo") cfg.coupling_lo = parse_double_value(where, value);
    else if (key == "coupling_hi") cfg.coupling_hi = parse_double_value(where, value);
    else if (key == "bandwidth") cfg.bandwidth = parse_double_value(where, value);
    else if (key == "source_strength")
      cfg.source_strength = parse_double_value(where, value);
    else if (key == "beta") cfg.beta = parse_double_value(where, value);
    else bad_key(where);
  } else if (section == "schedule") {
    if (key == "t_off") cfg.t_off = parse_double_value(where, value);
    else if (key == "t_split") cfg.t_split = parse_double_value(where, value);
    else if (key == "t_f") cfg.t_f = parse_double_value(where, value);
    else if (key == "grid_points")
      cfg.grid_points = static_cast<Index>(parse_int_value(where, value));
    else bad_key(where);
  } else if (section == "scan") {
    if (key == "sector_levels") cfg.scan_levels = parse_list_value(where, value);
    else if (key == "subunits") cfg.scan_subunits = parse_list_value(where, value);
    else if (key == "seeds")
      cfg.scan_seeds = static_cast<Index>(parse_int_value(where, value));
    else bad_key(where);
  } else if (section == "runs") {
    if (key == "count") cfg.run_count = parse_int_value(where, value);
    else if (key == "tree_depth")
      cfg.tree_depth = static_cast<Index>(parse_int_value(where, value));
    else if (key == "max_children")
      cfg.max_children = static_cast<Index>(parse_int_value(where, value));
    else if (key == "decomposition_parts")
      cfg.decomposition_parts = static_cast<Index>(parse_int_value(where, value));
    else if (key == "decomposition_samples")
      cfg.decomposition_samples = static_cast<Index>(parse_int_value(where, value));
    else if (key == "window_lo") cfg.window_lo = parse_double_value(where, value);
    else if (key == "window_hi") cfg.window_hi = parse_double_value(where, value);
    else bad_key(where);
  } else {
    throw ConfigError("config error: unknown section '[" + section + "]'");
  }
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::stringstream ss(text);
  std::string line;
  std::string section;
  while (std::getline(ss, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("config error: malformed section header '" + line + "'");
      section = trim(line.substr(1, line.size() - 2));
      if (section != "experiment" && section != "model" && section != "schedule" &&
          section != "scan" && section != "runs")
        throw ConfigError("config error: unknown section '[" + section + "]'");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config error: expected 'key = value', got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError("config error: empty key in line '" + line + "'");
    if (section.empty())
      throw ConfigError("config error: key '" + key + "' outside any section");
    apply_key(cfg, section, key, value);
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config error: cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

Json config_echo(const ExperimentConfig& c) {
  Json j;
  j["experiment"] = {{"scenario", c.scenario}, {"seed", c.seed}, {"out_dir", c.out_dir}};
  j["model"] = {{"apparatus", c.apparatus},
                {"d_s", c.d_s},
                {"n_out", c.n_out},
                {"initial_system", c.initial_system},
                {"system_energy", c.system_energy},
                {"sector_levels", c.sector_levels},
                {"subunits", c.subunits},
                {"coupling_lo", c.coupling_lo},
                {"coupling_hi", c.coupling_hi},
                {"bandwidth", c.bandwidth},
                {"source_strength", c.source_strength},
                {"beta", c.beta}};
  j["schedule"] = {{"t_off", c.t_off},
                   {"t_split", c.t_split},
                   {"t_f", c.t_f},
                   {"grid_points", c.grid_points}};
  j["scan"] = {{"sector_levels", c.scan_levels},
               {"subunits", c.scan_subunits},
               {"seeds", c.scan_seeds}};
  j["runs"] = {{"count", c.run_count},
               {"tree_depth", c.tree_depth},
               {"max_children", c.max_children},
               {"decomposition_parts", c.decomposition_parts},
               {"decomposition_samples", c.decomposition_samples},
               {"window_lo", c.window_lo},
               {"window_hi", c.window_hi}};
  return j;
}

Json checks_to_json(const std::vector<CheckResult>& checks) {
  Json arr = Json::array();
  for (const CheckResult& c : checks)
    arr.push_back({{"name", c.name},
                   {"pass", c.pass},
                   {"value", c.value},
                   {"tolerance", c.tolerance}});
  return arr;
}

std::string format_number(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw std::runtime_error("format_number: conversion failed");
  return std::string(buf, ptr);
}

CsvWriter::CsvWriter(std::string scenario) : scenario_(std::move(scenario)) {
  text_ = "scenario,seed,param,t,metric,value\n";
}

void CsvWriter::add(std::uint64_t seed, double param, double t,
                    const std::string& metric, double value) {
  if (!std::isfinite(value))
    throw std::runtime_error("CsvWriter: non-finite value for metric '" + metric +
                             "'");
  text_ += scenario_;
  text_ += ',';
  text_ += std::to_string(seed);
  text_ += ',';
  text_ += format_number(param);
  text_ += ',';
  text_ += format_number(t);
  text_ += ',';
  text_ += metric;
  text_ += ',';
  text_ += format_number(value);
  text_ += '\n';
}

CMatrix default_observable(Index d_s, Index n_out) {
  if (d_s < 1 || n_out < 1 || n_out > d_s)
    throw std::invalid_argument("default_observable: need 1 <= n_out <= d_s");
  const std::vector<double> values = default_pointer_values(n_out);
  CMatrix obs = CMatrix::Zero(d_s, d_s);
  for (Index a = 0; a < d_s; ++a)
    obs(a, a) = values[static_cast<std::size_t>(std::min<Index>(a, n_out - 1))];
  return obs;
}

CMatrix default_initial_system(const ExperimentConfig& config, std::uint64_t seed) {
  const Index d = config.d_s;
  if (config.initial_system == "mixed")
    return CMatrix::Identity(d, d) / static_cast<double>(d);
  if (config.initial_system == "plus_x") {
    if (d != 2)
      throw ConfigError(
          "config error: key 'model.initial_system' value 'plus_x' needs d_s = 2");
    return CMatrix::Constant(2, 2, Complex(0.5, 0.0));
  }
  if (config.initial_system == "random_diagonal") {
    Substream rng(seed, "system/initial");
    RVector p(d);
    for (Index a = 0; a < d; ++a) p(a) = -std::log(1.0 - rng.next_double());
    p /= p.sum();
    CMatrix r0 = CMatrix::Zero(d, d);
    for (Index a = 0; a < d; ++a) r0(a, a) = p(a);
    return r0;
  }
  throw ConfigError("config error: unknown value '" + config.initial_system +
                    "' for key 'model.initial_system'");
}

namespace {

ApparatusSpec build_apparatus(const ExperimentConfig& cfg, std::uint64_t seed) {
  if (cfg.apparatus == "dephasing") {
    const RVector couplings = draw_dephasing_couplings(
        cfg.subunits, cfg.coupling_lo, cfg.coupling_hi, seed);
    const std::vector<double> values = default_pointer_values(cfg.n_out);
    std::vector<double> signs(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) signs[i] = 2.0 * values[i];
    return make_dephasing_apparatus(cfg.n_out, cfg.subunits, couplings, signs);
  }
  if (cfg.apparatus == "ergodic") {
    return make_ergodic_apparatus(cfg.n_out, cfg.sector_levels, cfg.bandwidth,
                                  cfg.source_strength * cfg.bandwidth,
                                  default_pointer_values(cfg.n_out), seed);
  }
  throw ConfigError("config error: unknown value '" + cfg.apparatus +
                    "' for key 'model.apparatus'");
}

double resolve_t_split(const ExperimentConfig& cfg, std::uint64_t seed) {
  if (cfg.t_split > 0.0) return cfg.t_split;
  const double fallback = 0.5 * (cfg.t_off + cfg.t_f);
  if (cfg.apparatus == "dephasing") {
    // First grid time past t_off at which the analytic coherence factor has
    // fallen under twice its plateau scale.
    const RVector couplings = draw_dephasing_couplings(
        cfg.subunits, cfg.coupling_lo, cfg.coupling_hi, seed);
    ScheduleSpec probe;
    probe.t_off = cfg.t_off;
    probe.t_split = fallback;
    probe.t_f = cfg.t_f;
    probe.grid_points = cfg.grid_points;
    const double threshold =
        2.0 * std::pow(2.0, -0.5 * static_cast<double>(cfg.subunits));
    for (double t : time_grid(probe)) {
      if (t <= cfg.t_off) continue;
      if (std::abs(dephasing_coherence_factor(couplings, 2.0, t)) < threshold)
        return t;
    }
    return fallback;
  }
  return std::min(2.0 * cfg.t_off, fallback);
}

}  // namespace

MeasurementModel build_model(const ExperimentConfig& config, std::uint64_t seed) {
  const CMatrix observable = default_observable(config.d_s, config.n_out);
  CMatrix h_s = CMatrix::Zero(config.d_s, config.d_s);
  if (config.system_energy == "observable") h_s = observable;
  else if (config.system_energy != "none")
    throw ConfigError("config error: unknown value '" + config.system_energy +
                      "' for key 'model.system_energy'");
  const CMatrix r0 = default_initial_system(config, seed);
  TestedSystemSpec system = make_tested_system(observable, h_s, r0);
  ApparatusSpec apparatus = build_apparatus(config, seed);
  ScheduleSpec schedule;
  schedule.t_off = config.t_off;
  schedule.t_split = resolve_t_split(config, seed);
  schedule.t_f = config.t_f;
  schedule.grid_points = config.grid_points;
  return assemble_model(std::move(system), std::move(apparatus), schedule, config.beta,
                        seed);
}

void write_outputs(const ScenarioResult& result, const std::string& out_dir,
                   const std::string& scenario) {
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path base(out_dir);
  {
    std::ofstream csv(base / (scenario + ".csv"), std::ios::binary);
    csv << result.csv;
    if (!csv) throw std::runtime_error("write_outputs: cannot write CSV");
  }
  {
    std::ofstream js(base / (scenario + "_summary.json"), std::ios::binary);
    js << result.summary.dump(2) << '\n';
    if (!js) throw std::runtime_error("write_outputs: cannot write summary");
  }
}

}  // namespace qmsim
