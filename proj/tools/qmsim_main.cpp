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

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "qmsim/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"qmsim: ideal measurement models with reproducible outputs"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::string inject = "none";
  std::uint64_t seed = 0;
  bool quiet = false;

  CLI::App* run = app.add_subcommand("run", "run one configured scenario");
  run->add_option("--config", config_path, "path to the experiment config")
      ->required();
  run->add_option("--out", out_dir, "output directory (overrides the config)");
  CLI::Option* run_seed = run->add_option("--seed", seed, "master seed override");
  run->add_flag("--quiet", quiet, "suppress status output");

  CLI::App* verify = app.add_subcommand("verify", "run the invariant battery");
  verify->add_option("--inject", inject,
                     "deliberate fault: none, sector_mixing, corrupt_merge");
  verify->add_option("--out", out_dir, "directory for the verify summary JSON");
  CLI::Option* verify_seed =
      verify->add_option("--seed", seed, "master seed override");
  verify->add_flag("--quiet", quiet, "suppress per-check output");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      qmsim::ExperimentConfig cfg = qmsim::load_config(config_path);
      if (run_seed->count() > 0) cfg.seed = seed;
      if (!out_dir.empty()) cfg.out_dir = out_dir;
      const qmsim::ScenarioResult result = qmsim::run_scenario(cfg);
      qmsim::write_outputs(result, cfg.out_dir, cfg.scenario);
      if (!quiet) {
        int failed = 0;
        for (const auto& check : result.summary["checks"])
          if (!check["pass"].get<bool>()) ++failed;
        std::cout << cfg.scenario << ": " << result.summary["checks"].size()
                  << " checks, " << failed << " failed; outputs in " << cfg.out_dir
                  << "\n";
      }
      return 0;
    }

    qmsim::VerifyOptions options;
    options.inject = inject;
    if (verify_seed->count() > 0) options.seed = seed;
    const qmsim::VerifyReport report = qmsim::run_verify(options);
    if (!quiet) {
      for (const qmsim::CheckResult& check : report.checks)
        std::cout << (check.pass ? "[ ok ] " : "[fail] ") << check.name
                  << "  value=" << check.value << "  tolerance=" << check.tolerance
                  << "\n";
    }
    if (!out_dir.empty()) {
      std::filesystem::create_directories(out_dir);
      std::ofstream out(std::filesystem::path(out_dir) / "verify_summary.json",
                        std::ios::binary);
      out << report.summary.dump(2) << '\n';
    }
    if (!report.pass) {
      qmsim::Json failures = qmsim::Json::array();
      for (const qmsim::CheckResult& check : report.checks)
        if (!check.pass)
          failures.push_back({{"name", check.name},
                              {"value", check.value},
                              {"tolerance", check.tolerance}});
      std::cout << failures.dump() << "\n";
      return 1;
    }
    return 0;
  } catch (const qmsim::ConfigError& error) {
    std::cerr << error.what() << "\n";
    return 2;
  } catch (const std::exception& error) {
    std::cerr << "error: " << error.what() << "\n";
    return 1;
  }
}
