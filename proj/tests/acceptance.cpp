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
// Release gate: ten numbered end-to-end criteria, one pass/fail line each.
// Run without arguments for the full battery or with a single number to run
// one criterion.  The exit status is the number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "qmsim/block_dynamics.hpp"
#include "qmsim/ensemble_statistics.hpp"
#include "qmsim/equilibrium.hpp"
#include "qmsim/experiment.hpp"
#include "qmsim/model_factory.hpp"
#include "qmsim/operator_algebra.hpp"
#include "qmsim/rng.hpp"
#include "qmsim/subensembles.hpp"

using namespace qmsim;

namespace {

double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::string fmt(const char* pattern, double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), pattern, value);
  return buffer;
}

CMatrix diag2(double a, double b) {
  CMatrix m = CMatrix::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return m;
}

CMatrix random_density(Index n, Substream& rng) {
  const CMatrix a = gaussian_complex_matrix(n, n, rng);
  const CMatrix d = a * a.adjoint();
  return d / d.trace();
}

// Two outcomes, four levels per sector, fully random Hermitian apparatus
// energy and sources: the block equations must match the joint-space unitary
// for any such data, not just for the shipped factories.
MeasurementModel random_joint_model() {
  Substream rng(2026, "acceptance/joint");
  const TestedSystemSpec system =
      make_tested_system(diag2(0.5, -0.5), CMatrix::Zero(2, 2), random_density(2, rng));

  ApparatusSpec apparatus;
  apparatus.diagonal = false;
  apparatus.dim = 8;
  apparatus.sectors = {{0.5, 4, 0}, {-0.5, 4, 4}};
  apparatus.pointer_gap = 1.0;
  apparatus.hamiltonian = random_gue(8, 1.0, rng);
  apparatus.sources = {random_gue(8, 1.0, rng), random_gue(8, 1.0, rng)};
  apparatus.initial_state = random_density(8, rng);
  apparatus.pointer_diag = RVector::Zero(8);
  for (Index z = 0; z < 8; ++z) apparatus.pointer_diag(z) = z < 4 ? 0.5 : -0.5;

  ScheduleSpec schedule;
  schedule.t_off = 5.0;
  schedule.t_split = 6.0;
  schedule.t_f = 20.0;
  schedule.grid_points = 50;
  return assemble_model(system, apparatus, schedule, 1.0, 2026);
}

ExperimentConfig scan_config(Index levels, std::uint64_t seed) {
  ExperimentConfig cfg;
  cfg.apparatus = "ergodic";
  cfg.initial_system = "random_diagonal";
  cfg.sector_levels = levels;
  cfg.t_off = 1.0;
  cfg.t_split = 2.0;
  cfg.t_f = 50.0;
  cfg.seed = seed;
  return cfg;
}

MeasurementModel coherent_start_model(Index levels, std::uint64_t seed) {
  CMatrix r0 = CMatrix::Zero(2, 2);
  r0(0, 0) = 0.6;
  r0(1, 1) = 0.4;
  r0(0, 1) = r0(1, 0) = 0.2;
  const TestedSystemSpec system =
      make_tested_system(diag2(0.5, -0.5), CMatrix::Zero(2, 2), r0);
  const ApparatusSpec apparatus =
      make_ergodic_apparatus(2, levels, 1.0, 5.0, default_pointer_values(2), seed);
  ScheduleSpec schedule;
  schedule.t_off = 1.0;
  schedule.t_split = 2.0;
  schedule.t_f = 50.0;
  return assemble_model(system, apparatus, schedule, 1.0, seed);
}

// 1. Block evolution against the joint-space unitary oracle.
bool criterion1(std::string& detail) {
  const MeasurementModel model = random_joint_model();
  const BlockPropagator prop(model);
  const BlockState init = init_blocks(model);
  const FullEvolutionOracle oracle(model);
  double worst = 0.0;
  for (double t : uniform_grid(20.0, 50)) {
    const BlockState state = prop.propagate(init, t);
    worst = std::max(worst, max_abs_diff(assemble_full(state), oracle.state_at(t)));
  }
  detail = "max deviation " + fmt("%.3g", worst) + " (tolerance 1e-10)";
  return worst <= 1e-10;
}

// 2. Conserved quantities of the criterion-1 model along the schedule.
bool criterion2(std::string& detail) {
  const MeasurementModel model = random_joint_model();
  const BlockPropagator prop(model);
  const BlockState init = init_blocks(model);
  RMatrix f_values(2, 2);
  f_values << 1.0, 1.0, 0.5, -0.5;
  ConservationReport worst;
  for (double t : uniform_grid(20.0, 50)) {
    const ConservationReport report =
        conservation_check(prop.propagate(init, t), model, f_values);
    worst.max_trace_drift = std::max(worst.max_trace_drift, report.max_trace_drift);
    worst.max_weight_drift = std::max(worst.max_weight_drift, report.max_weight_drift);
    worst.max_observable_drift =
        std::max(worst.max_observable_drift, report.max_observable_drift);
  }
  detail = "trace drift " + fmt("%.3g", worst.max_trace_drift) +
           " (1e-12), observable drift " + fmt("%.3g", worst.max_observable_drift) +
           " (1e-10), weight drift " + fmt("%.3g", worst.max_weight_drift) + " (1e-12)";
  return worst.max_trace_drift <= 1e-12 && worst.max_observable_drift <= 1e-10 &&
         worst.max_weight_drift <= 1e-12;
}

// 3. Twelve-subunit dephasing run against the closed-form cosine product.
bool criterion3(std::string& detail) {
  const RVector couplings = draw_dephasing_couplings(12, 0.5, 1.5, 42);
  CMatrix plus_x(2, 2);
  plus_x << 0.5, 0.5, 0.5, 0.5;
  const TestedSystemSpec system =
      make_tested_system(diag2(0.5, -0.5), CMatrix::Zero(2, 2), plus_x);
  const ApparatusSpec apparatus =
      make_dephasing_apparatus(2, 12, couplings, {1.0, -1.0});
  ScheduleSpec schedule;
  schedule.t_off = 50.0;
  schedule.t_split = 50.0;
  schedule.t_f = 50.0;
  schedule.grid_points = 200;
  const MeasurementModel model = assemble_model(system, apparatus, schedule, 1.0, 42);

  const BlockPropagator prop(model);
  const BlockState init = init_blocks(model);
  double mismatch = 0.0;
  double sum_sq = 0.0;
  Index n_window = 0;
  bool decayed = false;
  for (double t : time_grid(schedule)) {
    const BlockState state = prop.propagate(init, t);
    const double measured = std::abs(state.block_trace(0, 1));
    const double analytic = std::abs(dephasing_coherence_factor(couplings, 2.0, t));
    mismatch = std::max(mismatch, std::abs(measured - analytic));
    if (measured < 0.05) decayed = true;
    if (t >= 10.0) {
      sum_sq += measured * measured;
      ++n_window;
    }
  }
  const double rms = std::sqrt(sum_sq / static_cast<double>(n_window));
  const double expected = std::pow(2.0, -6.0);
  const double ratio = rms / expected;
  const bool plateau_ok = ratio >= 1.0 / 3.0 && ratio <= 3.0;
  detail = "analytic mismatch " + fmt("%.3g", mismatch) +
           " (1e-10), plateau rms " + fmt("%.3g", rms) + " vs " +
           fmt("%.3g", expected) + " (factor " + fmt("%.2f", ratio) + ")";
  return mismatch <= 1e-10 && decayed && plateau_ok;
}

// 4. Time-averaged conditioned sector states approach the uniform sector
//    mixture as the sector size grows.
bool criterion4(std::string& detail) {
  const std::vector<Index> levels{16, 32, 64};
  std::vector<double> medians;
  for (Index g : levels) {
    std::vector<double> distances;
    for (int k = 0; k < 10; ++k) {
      const std::uint64_t seed = 42 + static_cast<std::uint64_t>(k);
      distances.push_back(averaged_sector_distance(build_model(scan_config(g, seed), seed)));
    }
    medians.push_back(median(distances));
  }
  const bool monotone = medians[0] > medians[1] && medians[1] > medians[2];
  const double ratio = medians[0] / medians[2];
  detail = "median distances " + fmt("%.4f", medians[0]) + "/" + fmt("%.4f", medians[1]) +
           "/" + fmt("%.4f", medians[2]) + " for G = 16/32/64, ratio " +
           fmt("%.2f", ratio) + " (needs monotone decrease and >= 1.5)";
  return monotone && ratio >= 1.5;
}

// 5. Relaxation of random correlated pure subensembles: weights exactly
//    conserved, and the time-averaged state versus the weighted outcome
//    mixture under the same sector-size scan.
bool criterion5(std::string& detail) {
  const std::vector<Index> levels{16, 32, 64};
  std::vector<double> medians;
  std::vector<double> population_medians;
  double worst_drift = 0.0;
  for (Index g : levels) {
    std::vector<double> distances;
    std::vector<double> populations;
    for (int k = 0; k < 10; ++k) {
      const std::uint64_t seed = 42 + static_cast<std::uint64_t>(k);
      const MeasurementModel model = build_model(scan_config(g, seed), seed);
      const RelaxationPoint point = relaxation_point(model, seed);
      worst_drift = std::max(worst_drift, point.weight_drift);
      distances.push_back(point.averaged_state_distance);
      populations.push_back(point.pointer_population_distance);
    }
    medians.push_back(median(distances));
    population_medians.push_back(median(populations));
  }
  const bool weights_ok = worst_drift <= 1e-12;
  const bool monotone = medians[0] > medians[1] && medians[1] > medians[2];
  const double ratio = medians[0] / medians[2];
  const double population_ratio = population_medians[0] / population_medians[2];
  detail = "weight drift " + fmt("%.3g", worst_drift) +
           " (1e-12); joint-state distance medians " + fmt("%.4f", medians[0]) + "/" +
           fmt("%.4f", medians[1]) + "/" + fmt("%.4f", medians[2]) +
           ", ratio " + fmt("%.2f", ratio) +
           " (needs monotone decrease and >= 1.5); pointer-population distance "
           "medians " +
           fmt("%.4f", population_medians[0]) + "/" + fmt("%.4f", population_medians[1]) +
           "/" + fmt("%.4f", population_medians[2]) + ", ratio " +
           fmt("%.2f", population_ratio) + " (diagnostic only)";
  return weights_ok && monotone && ratio >= 1.5;
}

// 6. Random admissible decompositions stay positive inside the support; a
//    mispaired pure component is rejected for every weight above 1e-6.
bool criterion6(std::string& detail) {
  const MeasurementModel model = coherent_start_model(16, 7);
  const GibbsianForm form = equilibrium_form(model, EquilibriumFlavor::kMicrocanonical);
  const CMatrix state = assemble_form(form);

  double worst_leakage = 0.0;
  double worst_eigenvalue = 0.0;
  double worst_reconstruction = 0.0;
  for (int s = 0; s < 100; ++s) {
    const AdmissibleDecomposition dec =
        sample_admissible_decomposition(state, 40, 9000 + static_cast<std::uint64_t>(s));
    const SplitCheck check = check_admissible_decomposition(state, dec);
    worst_leakage = std::max(worst_leakage, check.support_leakage);
    worst_eigenvalue = std::min(worst_eigenvalue, check.min_component_eigenvalue);
    worst_reconstruction = std::max(worst_reconstruction, check.reconstruction_defect);
  }

  // Ninety percent correctly paired, ten percent with the sectors swapped:
  // still inadmissible at any weight k >= 1e-6, since the minimal eigenvalue
  // of state - k * component only decreases with k.
  const CorrelatedSubspace sub = correlated_subspace(model);
  const SubensembleSpec spec = random_correlated_pure(model, 31);
  const std::vector<Index> swapped{1, 0};
  const CVector paired = correlated_vector(sub, model, spec.amplitudes);
  const CVector crossed = correlated_vector(sub, model, spec.amplitudes, &swapped);
  const CVector mixed = std::sqrt(0.9) * paired + std::sqrt(0.1) * crossed;
  const CMatrix component = pure_density(mixed);
  const CMatrix probe = state - 1e-6 * component;
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(probe, Eigen::EigenvaluesOnly);
  const double probe_min = solver.eigenvalues().minCoeff();
  const double admissible = max_admissible_weight(state, component);

  detail = "support leakage " + fmt("%.3g", worst_leakage) +
           " (1e-10), min component eigenvalue " + fmt("%.3g", worst_eigenvalue) +
           " (-1e-10), reconstruction " + fmt("%.3g", worst_reconstruction) +
           "; mispaired: min eig at k = 1e-6 is " + fmt("%.3g", probe_min) +
           ", admissible weight " + fmt("%.3g", admissible);
  return worst_leakage <= 1e-10 && worst_eigenvalue >= -1e-10 &&
         worst_reconstruction <= 1e-10 && probe_min < -1e-10 && admissible < 1e-6;
}

// 7. Exact count additivity on random three-level trees plus root
//    frequencies against the outcome weights within three-sigma bounds.
bool criterion7(std::string& detail) {
  int consistent = 0;
  int within = 0;
  const int seeds = 100;
  for (int s = 0; s < seeds; ++s) {
    Substream p_rng(4242, "acceptance/born", static_cast<std::uint64_t>(s));
    RVector p(3);
    for (Index i = 0; i < 3; ++i) p(i) = -std::log(1.0 - p_rng.next_double());
    p /= p.sum();

    Substream tree_rng(4242, "acceptance/tree", static_cast<std::uint64_t>(s));
    const SubensembleNode root = random_hierarchy(p, 10000, 3, 4, tree_rng);
    const HierarchyAudit audit = hierarchy_audit(root, &p);
    if (audit.consistent && root.runs == 10000) ++consistent;
    if (audit.born_within_bounds) ++within;
  }
  detail = "exact merges " + std::to_string(consistent) + "/100, within 3 sigma " +
           std::to_string(within) + "/100 (needs 100 and >= 99)";
  return consistent == seeds && within >= 99;
}

// 8. Maximum-entropy solver: recover the inverse temperature, match the dual
//    gradient against finite differences, reject an infeasible target.
bool criterion8(std::string& detail) {
  MaxEntProblem two_level;
  two_level.hamiltonian = diag2(0.0, 1.0);
  two_level.constraints = {two_level.hamiltonian};
  two_level.targets = RVector::Constant(1, 1.0 / (1.0 + std::exp(1.0)));
  const MaxEntResult result = max_ent_solve(two_level);
  const double beta_error = std::abs(result.multipliers(0) - 1.0);

  MaxEntProblem pair;
  pair.hamiltonian = CMatrix::Zero(3, 3);
  pair.hamiltonian(1, 1) = 1.0;
  pair.hamiltonian(2, 2) = 2.0;
  CMatrix number = CMatrix::Zero(3, 3);
  number(0, 0) = 1.0;
  number(2, 2) = 1.0;
  pair.constraints = {pair.hamiltonian, number};
  pair.targets = RVector(2);
  pair.targets << 0.9, 0.6;
  RVector theta(2);
  theta << 0.3, -0.2;
  const RVector grad = max_ent_dual_gradient(pair, theta);
  double fd_error = 0.0;
  const double h = 1e-5;
  for (Index k = 0; k < 2; ++k) {
    RVector up = theta, down = theta;
    up(k) += h;
    down(k) -= h;
    const double fd = (max_ent_dual(pair, up) - max_ent_dual(pair, down)) / (2.0 * h);
    fd_error = std::max(fd_error, std::abs(fd - grad(k)));
  }

  bool raised = false;
  try {
    MaxEntProblem bad = two_level;
    bad.targets = RVector::Constant(1, 1.5);
    max_ent_solve(bad);
  } catch (const InfeasibleTargets&) {
    raised = true;
  }

  detail = "beta error " + fmt("%.3g", beta_error) + " (1e-8), gradient error " +
           fmt("%.3g", fd_error) + " (1e-6), infeasible target " +
           (raised ? std::string("raised") : std::string("missed"));
  return beta_error <= 1e-8 && fd_error <= 1e-6 && raised;
}

// 9. Selecting a pointer outcome on the registered joint state and tracing
//    out the apparatus equals the conditional update on the system alone.
bool criterion9(std::string& detail) {
  const ApparatusSpec apparatus =
      make_ergodic_apparatus(2, 4, 1.0, 5.0, default_pointer_values(2), 5);
  ScheduleSpec schedule;
  schedule.t_off = 1.0;
  schedule.t_split = 2.0;
  schedule.t_f = 8.0;
  double worst = 0.0;
  for (int r = 0; r < 20; ++r) {
    Substream rng(6000 + static_cast<std::uint64_t>(r), "acceptance/two_path");
    const CMatrix r0 = random_density(2, rng);
    const TestedSystemSpec system =
        make_tested_system(diag2(0.5, -0.5), CMatrix::Zero(2, 2), r0);
    const MeasurementModel model = assemble_model(system, apparatus, schedule, 1.0, 5);
    const GibbsianForm form =
        equilibrium_form(model, EquilibriumFlavor::kMicrocanonical);
    const CMatrix joint = assemble_form(form);
    for (Index i = 0; i < 2; ++i) {
      if (form.weights(i) <= 1e-12) continue;
      const CMatrix reduced = partial_trace(select_outcome(joint, model, i), 2,
                                            model.apparatus.dim, Subsystem::kFirst);
      const CMatrix updated = luders_update(r0, model.system.family, i);
      worst = std::max(worst, max_abs_diff(reduced, updated));
    }
  }
  detail = "max deviation " + fmt("%.3g", worst) + " (1e-12) over 20 random states";
  return worst <= 1e-12;
}

// 10. Byte-identical CSV and JSON for repeated runs of every scenario.
bool criterion10(std::string& detail) {
  std::vector<ExperimentConfig> configs;
  {
    ExperimentConfig cfg;
    cfg.scenario = "full_run";
    cfg.apparatus = "dephasing";
    cfg.initial_system = "plus_x";
    cfg.subunits = 8;
    cfg.t_off = 20.0;
    cfg.t_split = 20.0;
    cfg.t_f = 20.0;
    cfg.grid_points = 60;
    cfg.window_lo = 5.0;
    cfg.window_hi = 20.0;
    configs.push_back(cfg);
  }
  {
    ExperimentConfig cfg;
    cfg.scenario = "decoherence_scan";
    cfg.apparatus = "dephasing";
    cfg.initial_system = "plus_x";
    cfg.scan_subunits = {4, 6};
    cfg.scan_seeds = 2;
    cfg.t_off = 20.0;
    cfg.t_split = 20.0;
    cfg.t_f = 20.0;
    cfg.grid_points = 60;
    cfg.window_lo = 5.0;
    cfg.window_hi = 20.0;
    configs.push_back(cfg);
  }
  {
    ExperimentConfig cfg;
    cfg.scenario = "subensemble_relaxation";
    cfg.initial_system = "random_diagonal";
    cfg.sector_levels = 8;
    cfg.scan_levels = {8};
    cfg.scan_seeds = 2;
    cfg.t_off = 1.0;
    cfg.t_split = 2.0;
    cfg.t_f = 20.0;
    cfg.grid_points = 50;
    configs.push_back(cfg);
  }
  {
    ExperimentConfig cfg;
    cfg.scenario = "maxent_check";
    configs.push_back(cfg);
  }
  {
    ExperimentConfig cfg;
    cfg.scenario = "born_frequencies";
    cfg.d_s = 3;
    cfg.n_out = 3;
    cfg.initial_system = "random_diagonal";
    cfg.sector_levels = 4;
    cfg.t_split = 2.0;
    cfg.t_f = 8.0;
    cfg.run_count = 2000;
    configs.push_back(cfg);
  }
  {
    ExperimentConfig cfg;
    cfg.scenario = "hierarchy_demo";
    cfg.d_s = 3;
    cfg.n_out = 3;
    cfg.initial_system = "random_diagonal";
    cfg.sector_levels = 4;
    cfg.t_split = 2.0;
    cfg.t_f = 8.0;
    cfg.run_count = 2000;
    configs.push_back(cfg);
  }

  const std::filesystem::path base =
      std::filesystem::temp_directory_path() / "qmsim_acceptance_rerun";
  std::filesystem::remove_all(base);
  auto read_file = [](const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
  };

  int identical = 0;
  std::string first_mismatch;
  for (const ExperimentConfig& cfg : configs) {
    const ScenarioResult a = run_scenario(cfg);
    const ScenarioResult b = run_scenario(cfg);
    const auto dir_a = base / cfg.scenario / "a";
    const auto dir_b = base / cfg.scenario / "b";
    write_outputs(a, dir_a.string(), cfg.scenario);
    write_outputs(b, dir_b.string(), cfg.scenario);
    const bool same =
        read_file(dir_a / (cfg.scenario + ".csv")) ==
            read_file(dir_b / (cfg.scenario + ".csv")) &&
        read_file(dir_a / (cfg.scenario + "_summary.json")) ==
            read_file(dir_b / (cfg.scenario + "_summary.json"));
    if (same)
      ++identical;
    else if (first_mismatch.empty())
      first_mismatch = cfg.scenario;
  }
  std::filesystem::remove_all(base);
  detail = std::to_string(identical) + "/6 scenarios byte-identical on rerun";
  if (!first_mismatch.empty()) detail += " (first mismatch: " + first_mismatch + ")";
  return identical == 6;
}

struct Entry {
  int number;
  const char* label;
  bool (*fn)(std::string&);
  double budget_seconds;
};

const Entry kEntries[] = {
    {1, "block evolution matches the joint-space oracle", criterion1, 5.0},
    {2, "conserved quantities hold along the schedule", criterion2, 0.0},
    {3, "dephasing run matches the cosine-product curve and plateau", criterion3,
     10.0},
    {4, "time-averaged sector states approach uniformity with sector size",
     criterion4, 120.0},
    {5, "correlated subensembles relax toward the weighted outcome mixture",
     criterion5, 120.0},
    {6, "admissible decompositions stay positive; mispairing is rejected",
     criterion6, 0.0},
    {7, "hierarchic counts merge exactly and track outcome weights", criterion7,
     0.0},
    {8, "maximum-entropy solver recovers, differentiates, and rejects",
     criterion8, 1.0},
    {9, "outcome selection plus partial trace equals the conditional update",
     criterion9, 0.0},
    {10, "repeated runs produce byte-identical outputs", criterion10, 0.0},
};

}  // namespace

int main(int argc, char** argv) {
  int selected = 0;
  if (argc > 1) selected = std::atoi(argv[1]);

  int failures = 0;
  for (const Entry& entry : kEntries) {
    if (selected != 0 && entry.number != selected) continue;
    const auto start = std::chrono::steady_clock::now();
    std::string detail;
    bool pass = false;
    try {
      pass = entry.fn(detail);
    } catch (const std::exception& e) {
      pass = false;
      detail = std::string("exception: ") + e.what();
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (entry.budget_seconds > 0.0 && seconds > entry.budget_seconds) {
      pass = false;
      detail += "; over the " + fmt("%.0f", entry.budget_seconds) + " s budget";
    }
    std::printf("[%s] criterion %d: %s; %s; %.2f s\n", pass ? "PASS" : "FAIL",
                entry.number, entry.label, detail.c_str(), seconds);
    if (!pass) ++failures;
  }
  return failures;
}
