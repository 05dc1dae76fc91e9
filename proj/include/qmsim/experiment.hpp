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
//
// Experiment harness: sectioned key-value configs, named scenarios, long
// format CSV output and a JSON summary per run.  Outputs are byte identical
// for identical (config, seed).

#ifndef QMSIM_EXPERIMENT_HPP_
#define QMSIM_EXPERIMENT_HPP_

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "qmsim/model_factory.hpp"
#include "qmsim/types.hpp"

namespace qmsim {

using Json = nlohmann::ordered_json;

// Raised on malformed or unknown config input; the message names the
// offending key or section.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// All knobs of every scenario, with shipped defaults.  The parser rejects
// keys outside this set; config_echo() materializes every field so summaries
// are self-describing.
struct ExperimentConfig {
  // [experiment]
  std::string scenario = "full_run";
  std::uint64_t seed = 42;
  std::string out_dir = "results";

  // [model]
  std::string apparatus = "ergodic";       // ergodic | dephasing
  Index d_s = 2;
  Index n_out = 2;
  std::string initial_system = "mixed";    // mixed | plus_x | random_diagonal
  std::string system_energy = "none";      // none | observable
  Index sector_levels = 16;                // levels per pointer sector
  Index subunits = 12;                     // dephasing subunits
  double coupling_lo = 0.5;
  double coupling_hi = 1.5;
  double bandwidth = 1.0;                  // semicircle scale of sector blocks
  double source_strength = 5.0;            // sector shift, units of bandwidth
  double beta = 1.0;

  // [schedule]
  double t_off = 1.0;
  double t_split = 0.0;                    // 0 resolves automatically
  double t_f = 50.0;
  Index grid_points = 200;

  // [scan]
  std::vector<Index> scan_levels{16, 32, 64};
  std::vector<Index> scan_subunits{8, 10, 12};
  Index scan_seeds = 10;

  // [runs]
  long long run_count = 10000;
  Index tree_depth = 3;
  Index max_children = 4;
  Index decomposition_parts = 40;
  Index decomposition_samples = 100;
  double window_lo = 10.0;
  double window_hi = 50.0;
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
Json config_echo(const ExperimentConfig& config);

struct CheckResult {
  std::string name;
  bool pass = false;
  double value = 0.0;
  double tolerance = 0.0;
};

Json checks_to_json(const std::vector<CheckResult>& checks);

// Long-format result sink: one metric per row, lossless shortest-round-trip
// number formatting.
class CsvWriter {
 public:
  explicit CsvWriter(std::string scenario);
  void add(std::uint64_t seed, double param, double t, const std::string& metric,
           double value);
  const std::string& text() const { return text_; }

 private:
  std::string scenario_;
  std::string text_;
};

std::string format_number(double value);

struct ScenarioResult {
  std::string csv;
  Json summary;
  bool pass = true;
};

// Model assembly shared by scenarios, verification, and tests.
CMatrix default_observable(Index d_s, Index n_out);
CMatrix default_initial_system(const ExperimentConfig& config, std::uint64_t seed);
MeasurementModel build_model(const ExperimentConfig& config, std::uint64_t seed);

// Median over outcomes of the trace distance between the time-averaged
// conditioned sector state of the full run and the uniform sector state.
double averaged_sector_distance(const MeasurementModel& model);

// One point of the relaxation scan: a random correlated pure subensemble is
// taken at t_split, time-averaged, and compared against the weighted outcome
// mixture in three ways.
struct RelaxationPoint {
  double averaged_state_distance = 0.0;      // joint trace distance
  double pointer_population_distance = 0.0;  // pointer-basis population L1/2
  double sector_state_distance = 0.0;        // full-run conditioned sectors
  double weight_drift = 0.0;                 // worst |q_i(t) - q_i(0)|
  double max_cross_coherence = 0.0;
};

RelaxationPoint relaxation_point(const MeasurementModel& model, std::uint64_t seed);

ScenarioResult run_scenario(const ExperimentConfig& config);

// Writes <out_dir>/<scenario>.csv and <out_dir>/<scenario>_summary.json.
void write_outputs(const ScenarioResult& result, const std::string& out_dir,
                   const std::string& scenario);

struct VerifyOptions {
  std::string inject = "none";  // none | sector_mixing | corrupt_merge
  std::uint64_t seed = 123;
};

struct VerifyReport {
  std::vector<CheckResult> checks;
  bool pass = true;
  Json summary;
};

// Small-dimension invariant battery behind the `verify` subcommand.  The
// injection hooks corrupt one input on purpose so the corresponding check
// must fail.
VerifyReport run_verify(const VerifyOptions& options);

}  // namespace qmsim

#endif  // QMSIM_EXPERIMENT_HPP_
