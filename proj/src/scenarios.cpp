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
// Named scenarios and the verification battery behind the CLI.

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "qmsim/block_dynamics.hpp"
#include "qmsim/ensemble_statistics.hpp"
#include "qmsim/equilibrium.hpp"
#include "qmsim/experiment.hpp"
#include "qmsim/rng.hpp"
#include "qmsim/subensembles.hpp"

namespace qmsim {

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  if (n % 2 == 1) return v[n / 2];
  return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void add_check(std::vector<CheckResult>& checks, const std::string& name, bool pass,
               double value, double tolerance) {
  checks.push_back({name, pass, value, tolerance});
}

Json finish(const ExperimentConfig& cfg, const std::vector<CheckResult>& checks,
            const Json& fitted, ScenarioResult& result) {
  Json summary;
  summary["scenario"] = cfg.scenario;
  summary["config_echo"] = config_echo(cfg);
  summary["checks"] = checks_to_json(checks);
  summary["fitted"] = fitted;
  result.pass = true;
  for (const CheckResult& c : checks) result.pass = result.pass && c.pass;
  result.summary = summary;
  return summary;
}

double pair_sign_gap(Index i, Index j) { return 2.0 * static_cast<double>(j - i); }

std::string pair_name(const std::string& stem, Index i, Index j) {
  return stem + "_" + std::to_string(i) + "_" + std::to_string(j);
}

std::string outcome_name(const std::string& stem, Index i) {
  return stem + "_" + std::to_string(i);
}

// ---------------------------------------------------------------------------
// full_run

ScenarioResult scenario_full_run(const ExperimentConfig& cfg) {
  ScenarioResult result;
  CsvWriter csv(cfg.scenario);
  std::vector<CheckResult> checks;
  Json fitted;

  MeasurementModel model = build_model(cfg, cfg.seed);
  const std::vector<double> grid = time_grid(model.schedule);
  const bool dephasing = model.apparatus.diagonal;

  // The uniform dephasing blocks never leave the microcanonical state, so
  // registration distances carry no content there; an undefined target also
  // keeps the large diagonal apparatus off the dense path.
  GibbsianForm targets;
  if (dephasing) {
    const Index n = model.system.family.n_out();
    targets.weights =
        born_probabilities(model.system.initial_state, model.system.family);
    targets.system_states.resize(static_cast<std::size_t>(n));
    targets.apparatus_states.resize(static_cast<std::size_t>(n));
    targets.defined.assign(static_cast<std::size_t>(n), false);
  } else {
    targets = equilibrium_form(model, EquilibriumFlavor::kMicrocanonical);
  }

  const IdealityReport ideality = validate_ideality(model);
  const double ideality_worst =
      std::max({ideality.projector_defect, ideality.sector_commutant_defect,
                ideality.system_state_defect, ideality.pointer_defect,
                ideality.coupling_rebuild_defect});
  add_check(checks, "ideal_coupling", ideality.ok, ideality_worst, kDerivedTol);

  RVector couplings;
  if (dephasing)
    couplings = draw_dephasing_couplings(cfg.subunits, cfg.coupling_lo,
                                         cfg.coupling_hi, cfg.seed);

  const DynamicsTrace trace = trace_dynamics(model, targets, grid);
  double analytic_mismatch = 0.0;
  std::vector<double> window_coherence;
  double decay_min = 1.0;
  double first_subthreshold = -1.0;
  for (std::size_t k = 0; k < trace.times.size(); ++k) {
    const double t = trace.times[k];
    double max_pair = 0.0;
    for (const CoherencePairRecord& rec : trace.coherence[k]) {
      csv.add(cfg.seed, 0.0, t, pair_name("coherence", rec.i, rec.j), rec.trace_abs);
      csv.add(cfg.seed, 0.0, t, pair_name("system_coherence", rec.i, rec.j),
              rec.system_coherence);
      max_pair = std::max(max_pair, rec.trace_abs);
      if (dephasing) {
        const double analytic = std::abs(
            dephasing_coherence_factor(couplings, pair_sign_gap(rec.i, rec.j), t));
        csv.add(cfg.seed, 0.0, t, pair_name("analytic_coherence", rec.i, rec.j),
                analytic);
        analytic_mismatch =
            std::max(analytic_mismatch, std::abs(rec.trace_abs - analytic));
      }
    }
    for (const RegistrationRecord& rec : trace.registration[k]) {
      if (!dephasing)
        csv.add(cfg.seed, 0.0, t, outcome_name("registration_distance", rec.i),
                rec.distance_raw);
      csv.add(cfg.seed, 0.0, t, outcome_name("pointer_expectation", rec.i),
              rec.pointer_expectation);
      csv.add(cfg.seed, 0.0, t, outcome_name("sector_weight", rec.i),
              rec.sector_weight);
    }
    if (t >= cfg.window_lo && t <= cfg.window_hi) window_coherence.push_back(max_pair);
    decay_min = std::min(decay_min, max_pair);
    if (first_subthreshold < 0.0 && max_pair < 0.05) first_subthreshold = t;
  }

  // Conserved quantities along a stride of the grid.
  const BlockPropagator prop(model);
  const BlockState init = init_blocks(model);
  const RMatrix f_values =
      RMatrix::Identity(model.system.family.n_out(), model.system.family.n_out());
  ConservationReport worst;
  const std::size_t stride = std::max<std::size_t>(1, grid.size() / 40);
  for (std::size_t k = 0; k < grid.size(); k += stride) {
    const BlockState state = prop.propagate(init, grid[k]);
    const ConservationReport rep = conservation_check(state, model, f_values);
    worst.max_trace_drift = std::max(worst.max_trace_drift, rep.max_trace_drift);
    worst.max_weight_drift = std::max(worst.max_weight_drift, rep.max_weight_drift);
    worst.max_observable_drift =
        std::max(worst.max_observable_drift, rep.max_observable_drift);
    worst.max_hermiticity_defect =
        std::max(worst.max_hermiticity_defect, rep.max_hermiticity_defect);
  }
  add_check(checks, "trace_conservation", worst.max_trace_drift <= kStructuralTol,
            worst.max_trace_drift, kStructuralTol);
  add_check(checks, "weight_conservation", worst.max_weight_drift <= kStructuralTol,
            worst.max_weight_drift, kStructuralTol);
  add_check(checks, "observable_conservation",
            worst.max_observable_drift <= kDerivedTol, worst.max_observable_drift,
            kDerivedTol);
  add_check(checks, "hermiticity", worst.max_hermiticity_defect <= kDerivedTol,
            worst.max_hermiticity_defect, kDerivedTol);

  const BlockState final_state = prop.propagate(init, model.schedule.t_f);
  const FinalStateReport final_report = final_state_check(final_state, model);
  fitted["final_residual"] = final_report.residual;
  fitted["final_max_coherence"] = final_report.max_coherence;
  fitted["t_split"] = model.schedule.t_split;

  if (dephasing) {
    add_check(checks, "analytic_coherence_match", analytic_mismatch <= kDerivedTol,
              analytic_mismatch, kDerivedTol);
    add_check(checks, "coherence_decay", decay_min < 0.05, decay_min, 0.05);
    double rms = 0.0;
    for (double c : window_coherence) rms += c * c;
    rms = window_coherence.empty()
              ? 0.0
              : std::sqrt(rms / static_cast<double>(window_coherence.size()));
    const double expected =
        std::pow(2.0, -0.5 * static_cast<double>(cfg.subunits));
    const double ratio = rms / expected;
    add_check(checks, "plateau_magnitude", ratio >= 1.0 / 3.0 && ratio <= 3.0, ratio,
              3.0);
    double sum_sq = 0.0;
    for (Index m = 0; m < couplings.size(); ++m)
      sum_sq += couplings(m) * couplings(m);
    fitted["decay_time"] = 1.0 / std::sqrt(2.0 * sum_sq);
    fitted["first_subthreshold_time"] = first_subthreshold;
    fitted["plateau_rms"] = rms;
    fitted["expected_plateau"] = expected;
  } else {
    // With sector-constant sources the pair coherence oscillates while the
    // coupling acts and freezes once it is off.
    const BlockState at_off = prop.propagate(init, model.schedule.t_off);
    const std::vector<CoherencePairRecord> ref = coherence_metrics(at_off, model);
    double freeze_drift = 0.0;
    for (std::size_t k = 0; k < trace.times.size(); ++k) {
      if (trace.times[k] < model.schedule.t_off) continue;
      for (std::size_t p = 0; p < ref.size(); ++p)
        freeze_drift = std::max(freeze_drift,
                                std::abs(trace.coherence[k][p].trace_abs -
                                         ref[p].trace_abs));
    }
    add_check(checks, "post_coupling_freeze", freeze_drift <= kDerivedTol,
              freeze_drift, kDerivedTol);
    const EquilibriumFit fit = identify_equilibrium(
        assemble_full(final_state), model, EquilibriumFlavor::kMicrocanonical);
    fitted["equilibrium_residual"] = fit.residual;
    fitted["equilibrium_offdiag_mass"] = fit.offdiag_mass;
    fitted["averaged_sector_distance"] = averaged_sector_distance(model);
    fitted["oscillation_period"] =
        2.0 * M_PI / (cfg.source_strength * cfg.bandwidth);
  }

  finish(cfg, checks, fitted, result);
  result.csv = csv.text();
  return result;
}

// ---------------------------------------------------------------------------
// decoherence_scan

ScenarioResult scenario_decoherence_scan(const ExperimentConfig& cfg) {
  if (cfg.apparatus != "dephasing")
    throw ConfigError(
        "config error: scenario 'decoherence_scan' needs model.apparatus = "
        "dephasing");
  ScenarioResult result;
  CsvWriter csv(cfg.scenario);
  std::vector<CheckResult> checks;
  Json fitted;

  std::vector<Index> subunit_list = cfg.scan_subunits;
  if (subunit_list.empty()) subunit_list.push_back(cfg.subunits);

  double analytic_mismatch = 0.0;
  std::vector<double> medians;
  for (Index m_count : subunit_list) {
    std::vector<double> plateau;
    for (Index k = 0; k < std::max<Index>(1, cfg.scan_seeds); ++k) {
      const std::uint64_t seed_k = cfg.seed + static_cast<std::uint64_t>(k);
      ExperimentConfig point = cfg;
      point.subunits = m_count;
      const MeasurementModel model = build_model(point, seed_k);
      const RVector couplings = draw_dephasing_couplings(
          m_count, cfg.coupling_lo, cfg.coupling_hi, seed_k);
      const BlockPropagator prop(model);
      const BlockState init = init_blocks(model);
      double sum_sq = 0.0;
      Index n_window = 0;
      for (double t : time_grid(model.schedule)) {
        const BlockState state = prop.propagate(init, t);
        const std::vector<CoherencePairRecord> recs = coherence_metrics(state, model);
        const double measured = recs.front().trace_abs;
        const double analytic =
            std::abs(dephasing_coherence_factor(couplings, 2.0, t));
        csv.add(seed_k, static_cast<double>(m_count), t, "coherence_0_1", measured);
        csv.add(seed_k, static_cast<double>(m_count), t, "analytic_coherence_0_1",
                analytic);
        analytic_mismatch =
            std::max(analytic_mismatch, std::abs(measured - analytic));
        if (t >= cfg.window_lo && t <= cfg.window_hi) {
          sum_sq += measured * measured;
          ++n_window;
        }
      }
      const double rms =
          n_window > 0 ? std::sqrt(sum_sq / static_cast<double>(n_window)) : 0.0;
      csv.add(seed_k, static_cast<double>(m_count), 0.0, "plateau_rms", rms);
      plateau.push_back(rms);
    }
    const double med = median(plateau);
    medians.push_back(med);
    const double expected = std::pow(2.0, -0.5 * static_cast<double>(m_count));
    fitted[outcome_name("plateau_median_m", m_count)] = med;
    fitted[outcome_name("expected_plateau_m", m_count)] = expected;
    const double ratio = med / expected;
    add_check(checks, outcome_name("plateau_scale_m", m_count),
              ratio >= 1.0 / 3.0 && ratio <= 3.0, ratio, 3.0);
  }
  add_check(checks, "analytic_coherence_match", analytic_mismatch <= kDerivedTol,
            analytic_mismatch, kDerivedTol);
  if (medians.size() > 1) {
    double worst_ratio = 0.0;
    for (std::size_t k = 0; k + 1 < medians.size(); ++k)
      worst_ratio = std::max(worst_ratio, medians[k + 1] / medians[k]);
    add_check(checks, "plateau_monotone", worst_ratio < 1.0, worst_ratio, 1.0);
  }

  finish(cfg, checks, fitted, result);
  result.csv = csv.text();
  return result;
}

}  // namespace

// ---------------------------------------------------------------------------
// Relaxation scan helpers (shared with the acceptance harness).

double averaged_sector_distance(const MeasurementModel& model) {
  if (model.apparatus.diagonal)
    throw std::invalid_argument("averaged_sector_distance: needs a dense apparatus");
  const BlockPropagator prop(model);
  const BlockState at_off =
      prop.propagate(init_blocks(model), model.schedule.t_off);
  const HermitianEigen eig_a = hermitian_eigen(model.apparatus.dense_hamiltonian());
  std::vector<double> distances;
  const Index n_out = model.system.family.n_out();
  for (Index i = 0; i < n_out; ++i) {
    const Index s = std::min<Index>(i, model.apparatus.n_sectors() - 1);
    const ApparatusSector& sector =
        model.apparatus.sectors[static_cast<std::size_t>(s)];
    const CMatrix averaged = diagonal_ensemble(at_off.block(i, i), eig_a);
    const CMatrix block =
        averaged.block(sector.offset, sector.offset, sector.levels, sector.levels);
    const double weight = block.trace().real();
    if (weight <= kStructuralTol) continue;
    const CMatrix uniform = CMatrix::Identity(sector.levels, sector.levels) /
                            static_cast<double>(sector.levels);
    distances.push_back(trace_distance(CMatrix(block / weight), uniform));
  }
  return median(distances);
}

RelaxationPoint relaxation_point(const MeasurementModel& model, std::uint64_t seed) {
  RelaxationPoint point;
  const CorrelatedSubspace sub = correlated_subspace(model);
  const SubensembleSpec spec = random_correlated_pure(model, seed);
  const double t_split = model.schedule.t_split;
  const double t_late = t_split + 0.5 * (model.schedule.t_f - t_split);

  const RVector q0 = weights_from_amplitudes(spec.amplitudes);
  const CMatrix at_split = evolve_amplitudes(model, spec.amplitudes, 0.0, t_split);
  const CMatrix late = evolve_amplitudes(model, at_split, t_split, t_late);
  const RVector q1 = weights_from_amplitudes(at_split);
  const RVector q2 = weights_from_amplitudes(late);
  point.weight_drift = std::max((q1 - q0).cwiseAbs().maxCoeff(),
                                (q2 - q0).cwiseAbs().maxCoeff());

  const CMatrix d_sub = correlated_density(sub, model, at_split);
  const Index d_a = model.apparatus.dim;
  for (Index i = 0; i < q0.size(); ++i) {
    const CMatrix p_joint =
        tensor(model.system.family.projectors[static_cast<std::size_t>(i)],
               CMatrix::Identity(d_a, d_a));
    point.weight_drift = std::max(
        point.weight_drift, std::abs((p_joint * d_sub).trace().real() - q0(i)));
  }

  const HermitianEigen eig_free = hermitian_eigen(full_hamiltonian(model, false));
  const CMatrix averaged = diagonal_ensemble(d_sub, eig_free);
  const CMatrix target = uniform_sector_target(sub, model, q0);
  point.averaged_state_distance = trace_distance(averaged, target);

  const RMatrix pops = sector_site_populations(averaged, sub, model);
  double l1 = 0.0;
  for (Index i = 0; i < pops.rows(); ++i)
    for (Index e = 0; e < pops.cols(); ++e)
      l1 += std::abs(pops(i, e) - q0(i) / static_cast<double>(pops.cols()));
  point.pointer_population_distance = 0.5 * l1;

  point.sector_state_distance = averaged_sector_distance(model);
  point.max_cross_coherence = subensemble_record(at_split).max_cross_coherence;
  return point;
}

namespace {

// ---------------------------------------------------------------------------
// subensemble_relaxation

ScenarioResult scenario_subensemble_relaxation(const ExperimentConfig& cfg) {
  if (cfg.apparatus != "ergodic")
    throw ConfigError(
        "config error: scenario 'subensemble_relaxation' needs model.apparatus = "
        "ergodic");
  ScenarioResult result;
  CsvWriter csv(cfg.scenario);
  std::vector<CheckResult> checks;
  Json fitted;

  std::vector<Index> levels_list = cfg.scan_levels;
  if (levels_list.empty()) levels_list.push_back(cfg.sector_levels);

  double worst_drift = 0.0;
  std::vector<double> med_full, med_pointer, med_sector;
  for (Index levels : levels_list) {
    std::vector<double> full, pointer, sector;
    for (Index k = 0; k < std::max<Index>(1, cfg.scan_seeds); ++k) {
      const std::uint64_t seed_k = cfg.seed + static_cast<std::uint64_t>(k);
      ExperimentConfig point_cfg = cfg;
      point_cfg.sector_levels = levels;
      const MeasurementModel model = build_model(point_cfg, seed_k);
      const RelaxationPoint point = relaxation_point(model, seed_k);
      const double g = static_cast<double>(levels);
      csv.add(seed_k, g, 0.0, "averaged_state_distance",
              point.averaged_state_distance);
      csv.add(seed_k, g, 0.0, "pointer_population_distance",
              point.pointer_population_distance);
      csv.add(seed_k, g, 0.0, "sector_state_distance", point.sector_state_distance);
      csv.add(seed_k, g, 0.0, "weight_drift", point.weight_drift);
      csv.add(seed_k, g, 0.0, "max_cross_coherence", point.max_cross_coherence);
      full.push_back(point.averaged_state_distance);
      pointer.push_back(point.pointer_population_distance);
      sector.push_back(point.sector_state_distance);
      worst_drift = std::max(worst_drift, point.weight_drift);
    }
    med_full.push_back(median(full));
    med_pointer.push_back(median(pointer));
    med_sector.push_back(median(sector));
    fitted[outcome_name("averaged_state_median_g", levels)] = med_full.back();
    fitted[outcome_name("pointer_population_median_g", levels)] = med_pointer.back();
    fitted[outcome_name("sector_state_median_g", levels)] = med_sector.back();
  }

  add_check(checks, "weights_time_invariant", worst_drift <= kStructuralTol,
            worst_drift, kStructuralTol);
  if (levels_list.size() > 1) {
    const auto scaling = [&](const std::vector<double>& med) {
      bool monotone = true;
      for (std::size_t k = 0; k + 1 < med.size(); ++k)
        monotone = monotone && med[k + 1] < med[k];
      const double ratio = med.back() > 0.0 ? med.front() / med.back() : 0.0;
      return std::make_pair(monotone && ratio >= 1.5, ratio);
    };
    const auto [sector_ok, sector_ratio] = scaling(med_sector);
    add_check(checks, "sector_state_scaling", sector_ok, sector_ratio, 1.5);
    const auto [full_ok, full_ratio] = scaling(med_full);
    add_check(checks, "averaged_state_scaling", full_ok, full_ratio, 1.5);
    const auto [pointer_ok, pointer_ratio] = scaling(med_pointer);
    add_check(checks, "pointer_population_scaling", pointer_ok, pointer_ratio, 1.5);
  }

  finish(cfg, checks, fitted, result);
  result.csv = csv.text();
  return result;
}

// ---------------------------------------------------------------------------
// maxent_check

ScenarioResult scenario_maxent_check(const ExperimentConfig& cfg) {
  ScenarioResult result;
  CsvWriter csv(cfg.scenario);
  std::vector<CheckResult> checks;
  Json fitted;

  CMatrix h2 = CMatrix::Zero(2, 2);
  h2(1, 1) = 1.0;
  const double target = 1.0 / (1.0 + std::exp(1.0));

  MaxEntProblem problem;
  problem.hamiltonian = h2;
  problem.constraints = {h2};
  problem.targets = RVector::Constant(1, target);
  const MaxEntResult solved = max_ent_solve(problem);
  const double beta_error = std::abs(solved.multipliers(0) - 1.0);
  add_check(checks, "beta_recovery", beta_error <= 1e-8, beta_error, 1e-8);
  fitted["beta"] = solved.multipliers(0);
  fitted["iterations"] = solved.iterations;
  fitted["constraint_residual"] = solved.constraint_residual;

  // Dual gradient against central differences on a two-constraint problem.
  CMatrix h3 = CMatrix::Zero(3, 3);
  h3(1, 1) = 1.0;
  h3(2, 2) = 2.0;
  CMatrix number = CMatrix::Zero(3, 3);
  number(0, 0) = 1.0;
  number(2, 2) = 1.0;
  MaxEntProblem pair;
  pair.hamiltonian = h3;
  pair.constraints = {h3, number};
  pair.targets = RVector::Zero(2);
  {
    RVector theta(2);
    theta << 0.7, -0.3;
    const RVector analytic_grad = max_ent_dual_gradient(pair, theta);
    double fd_error = 0.0;
    const double h = 1e-5;
    for (Index k = 0; k < 2; ++k) {
      RVector up = theta, down = theta;
      up(k) += h;
      down(k) -= h;
      const double fd = (max_ent_dual(pair, up) - max_ent_dual(pair, down)) / (2.0 * h);
      fd_error = std::max(fd_error, std::abs(fd - analytic_grad(k)));
    }
    add_check(checks, "dual_gradient", fd_error <= 1e-6, fd_error, 1e-6);
  }
  {
    RVector theta_star(2);
    theta_star << 0.7, -0.3;
    RVector grad_at_star = max_ent_dual_gradient(pair, theta_star);
    // gradient = target - <C>, so with zero targets <C> = -gradient.
    pair.targets = -grad_at_star;
    const MaxEntResult round = max_ent_solve(pair);
    const double round_error =
        (round.multipliers - theta_star).cwiseAbs().maxCoeff();
    add_check(checks, "round_trip", round_error <= 1e-8, round_error, 1e-8);
  }

  {
    MaxEntProblem infeasible = problem;
    infeasible.targets = RVector::Constant(1, 1.5);
    bool raised = false;
    try {
      max_ent_solve(infeasible);
    } catch (const InfeasibleTargets&) {
      raised = true;
    }
    add_check(checks, "infeasible_detected", raised, raised ? 1.0 : 0.0, 1.0);
  }

  {
    MaxEntProblem cold = problem;
    cold.targets = RVector::Constant(1, 1.0 / (1.0 + std::exp(50.0)));
    const MaxEntResult ground = max_ent_solve(cold);
    CMatrix projector = CMatrix::Zero(2, 2);
    projector(0, 0) = 1.0;
    const double ground_error = max_abs_diff(ground.state, projector);
    add_check(checks, "ground_state_limit", ground_error <= kDerivedTol, ground_error,
              kDerivedTol);
  }

  for (Index k = 0; k <= 40; ++k) {
    const double e = 0.05 + 0.01 * static_cast<double>(k);
    MaxEntProblem scan = problem;
    scan.targets = RVector::Constant(1, e);
    const MaxEntResult fit = max_ent_solve(scan);
    const double analytic = std::log((1.0 - e) / e);
    csv.add(cfg.seed, e, 0.0, "beta_fitted", fit.multipliers(0));
    csv.add(cfg.seed, e, 0.0, "beta_analytic", analytic);
    csv.add(cfg.seed, e, 0.0, "beta_error", std::abs(fit.multipliers(0) - analytic));
  }

  finish(cfg, checks, fitted, result);
  result.csv = csv.text();
  return result;
}

// ---------------------------------------------------------------------------
// born_frequencies

ScenarioResult scenario_born_frequencies(const ExperimentConfig& cfg) {
  ScenarioResult result;
  CsvWriter csv(cfg.scenario);
  std::vector<CheckResult> checks;
  Json fitted;

  const CMatrix observable = default_observable(cfg.d_s, cfg.n_out);
  const CMatrix r0 = default_initial_system(cfg, cfg.seed);
  const ProjectorFamily family = projector_family(observable);
  const RVector p = born_probabilities(r0, family);
  for (Index i = 0; i < p.size(); ++i)
    csv.add(cfg.seed, 0.0, 0.0, outcome_name("born_probability", i), p(i));

  std::vector<long long> batches{std::max<long long>(1, cfg.run_count / 100),
                                 std::max<long long>(1, cfg.run_count / 10),
                                 cfg.run_count};
  batches.erase(std::unique(batches.begin(), batches.end()), batches.end());

  std::vector<long long> final_counts;
  for (long long n : batches) {
    Substream rng(cfg.seed, "runs/sample", static_cast<std::uint64_t>(n));
    const std::vector<long long> counts = sample_runs(p, n, rng);
    double max_dev = 0.0;
    for (Index i = 0; i < p.size(); ++i) {
      const double freq =
          static_cast<double>(counts[static_cast<std::size_t>(i)]) /
          static_cast<double>(n);
      csv.add(cfg.seed, static_cast<double>(n), 0.0, outcome_name("frequency", i),
              freq);
      csv.add(cfg.seed, static_cast<double>(n), 0.0, outcome_name("deviation", i),
              std::abs(freq - p(i)));
      max_dev = std::max(max_dev, std::abs(freq - p(i)));
    }
    csv.add(cfg.seed, static_cast<double>(n), 0.0, "max_deviation", max_dev);
    if (n == cfg.run_count) final_counts = counts;
  }

  long long total = 0;
  for (long long c : final_counts) total += c;
  add_check(checks, "counts_complete", total == cfg.run_count,
            static_cast<double>(total - cfg.run_count), 0.0);
  for (Index i = 0; i < p.size(); ++i) {
    const double freq =
        static_cast<double>(final_counts[static_cast<std::size_t>(i)]) /
        static_cast<double>(cfg.run_count);
    const double dev = std::abs(freq - p(i));
    const double bound =
        3.0 * std::sqrt(p(i) * (1.0 - p(i)) / static_cast<double>(cfg.run_count));
    add_check(checks, outcome_name("within_3sigma", i), dev <= bound, dev, bound);
  }
  fitted["runs"] = cfg.run_count;

  finish(cfg, checks, fitted, result);
  result.csv = csv.text();
  return result;
}

// ---------------------------------------------------------------------------
// hierarchy_demo

ScenarioResult scenario_hierarchy_demo(const ExperimentConfig& cfg) {
  ScenarioResult result;
  CsvWriter csv(cfg.scenario);
  std::vector<CheckResult> checks;
  Json fitted;

  const CMatrix observable = default_observable(cfg.d_s, cfg.n_out);
  const CMatrix r0 = default_initial_system(cfg, cfg.seed);
  const ProjectorFamily family = projector_family(observable);
  const RVector p = born_probabilities(r0, family);

  Substream rng(cfg.seed, "hierarchy/tree");
  const SubensembleNode root =
      random_hierarchy(p, cfg.run_count, cfg.tree_depth, cfg.max_children, rng);
  const HierarchyAudit audit = hierarchy_audit(root, &p);

  // Breadth-first walk; rows carry (level, ordinal within level).
  Index node_count = 0, leaf_count = 0;
  std::vector<const SubensembleNode*> frontier{&root};
  Index level = 0;
  while (!frontier.empty()) {
    std::vector<const SubensembleNode*> next;
    for (std::size_t ord = 0; ord < frontier.size(); ++ord) {
      const SubensembleNode* node = frontier[ord];
      ++node_count;
      if (node->children.empty()) ++leaf_count;
      csv.add(cfg.seed, static_cast<double>(level), static_cast<double>(ord), "runs",
              static_cast<double>(node->runs));
      const RVector w = node->weights();
      for (Index i = 0; i < w.size(); ++i)
        csv.add(cfg.seed, static_cast<double>(level), static_cast<double>(ord),
                outcome_name("weight", i), w(i));
      for (const SubensembleNode& child : node->children) next.push_back(&child);
    }
    frontier = std::move(next);
    ++level;
  }

  add_check(checks, "merge_exact", audit.consistent, audit.consistent ? 0.0 : 1.0,
            0.0);
  double worst_ratio = 0.0;
  for (Index i = 0; i < audit.deviations.size(); ++i)
    if (audit.bounds(i) > 0.0)
      worst_ratio = std::max(worst_ratio, audit.deviations(i) / audit.bounds(i));
  add_check(checks, "root_within_3sigma", audit.born_within_bounds, worst_ratio, 1.0);
  fitted["node_count"] = node_count;
  fitted["leaf_count"] = leaf_count;
  fitted["levels"] = level;
  if (!audit.consistent) fitted["first_violation"] = audit.first_violation;

  finish(cfg, checks, fitted, result);
  result.csv = csv.text();
  return result;
}

}  // namespace

ScenarioResult run_scenario(const ExperimentConfig& config) {
  if (config.scenario == "full_run") return scenario_full_run(config);
  if (config.scenario == "decoherence_scan") return scenario_decoherence_scan(config);
  if (config.scenario == "subensemble_relaxation")
    return scenario_subensemble_relaxation(config);
  if (config.scenario == "maxent_check") return scenario_maxent_check(config);
  if (config.scenario == "born_frequencies")
    return scenario_born_frequencies(config);
  if (config.scenario == "hierarchy_demo") return scenario_hierarchy_demo(config);
  throw ConfigError("config error: unknown scenario '" + config.scenario + "'");
}

// ---------------------------------------------------------------------------
// verify

VerifyReport run_verify(const VerifyOptions& options) {
  VerifyReport report;
  std::vector<CheckResult>& checks = report.checks;

  ExperimentConfig cfg;
  cfg.apparatus = "ergodic";
  cfg.d_s = 2;
  cfg.n_out = 2;
  cfg.initial_system = "random_diagonal";
  cfg.sector_levels = 4;
  cfg.t_off = 1.0;
  cfg.t_split = 2.0;
  cfg.t_f = 8.0;
  cfg.grid_points = 40;
  MeasurementModel model = build_model(cfg, options.seed);

  if (options.inject == "sector_mixing") {
    CMatrix mixer = CMatrix::Zero(cfg.d_s, cfg.d_s);
    mixer(0, cfg.d_s - 1) = 1.0;
    mixer(cfg.d_s - 1, 0) = 1.0;
    model.coupling +=
        1e-3 * tensor(mixer, CMatrix::Identity(model.apparatus.dim,
                                               model.apparatus.dim));
  } else if (options.inject != "none" && options.inject != "corrupt_merge") {
    throw ConfigError("config error: unknown injection '" + options.inject + "'");
  }

  {
    const IdealityReport rep = validate_ideality(model);
    const double worst =
        std::max({rep.projector_defect, rep.sector_commutant_defect,
                  rep.system_state_defect, rep.pointer_defect,
                  rep.coupling_rebuild_defect});
    add_check(checks, "ideality", rep.ok, worst, kStructuralTol);
  }

  {
    const BlockPropagator prop(model);
    const BlockState init = init_blocks(model);
    const FullEvolutionOracle oracle(model);
    double worst = 0.0;
    ConservationReport drift;
    const RMatrix f_values = RMatrix::Identity(cfg.n_out, cfg.n_out);
    for (double t : uniform_grid(cfg.t_f, 9)) {
      const BlockState state = prop.propagate(init, t);
      worst = std::max(worst, max_abs_diff(assemble_full(state), oracle.state_at(t)));
      const ConservationReport rep = conservation_check(state, model, f_values);
      drift.max_trace_drift = std::max(drift.max_trace_drift, rep.max_trace_drift);
      drift.max_weight_drift = std::max(drift.max_weight_drift, rep.max_weight_drift);
      drift.max_observable_drift =
          std::max(drift.max_observable_drift, rep.max_observable_drift);
    }
    add_check(checks, "oracle_equivalence", worst <= kDerivedTol, worst, kDerivedTol);
    const double conserved =
        std::max(drift.max_trace_drift, drift.max_weight_drift);
    add_check(checks, "conservation", conserved <= kStructuralTol, conserved,
              kStructuralTol);
    add_check(checks, "observable_conservation",
              drift.max_observable_drift <= kDerivedTol, drift.max_observable_drift,
              kDerivedTol);
  }

  const GibbsianForm form =
      equilibrium_form(model, EquilibriumFlavor::kMicrocanonical);
  const CMatrix d_eq = assemble_form(form);
  {
    double worst_leak = 0.0, worst_eig = 0.0, worst_recon = 0.0;
    Substream seeds(options.seed, "verify/decomposition");
    for (Index s = 0; s < 5; ++s) {
      const AdmissibleDecomposition dec = sample_admissible_decomposition(
          d_eq, 12, seeds.next_u64());
      const SplitCheck check = check_admissible_decomposition(d_eq, dec);
      worst_leak = std::max(worst_leak, check.support_leakage);
      worst_eig = std::min(worst_eig, check.min_component_eigenvalue);
      worst_recon = std::max(
          worst_recon, std::max(check.reconstruction_defect, check.weight_defect));
    }
    add_check(checks, "confinement_leakage", worst_leak <= kDerivedTol, worst_leak,
              kDerivedTol);
    add_check(checks, "confinement_positivity", worst_eig >= kPsdFloor, worst_eig,
              kPsdFloor);
    add_check(checks, "confinement_reconstruction", worst_recon <= kDerivedTol,
              worst_recon, kDerivedTol);
  }

  {
    const CorrelatedSubspace sub = correlated_subspace(model);
    Substream rng(options.seed, "verify/mispaired");
    const CMatrix amps =
        random_amplitudes(cfg.n_out, model.apparatus.sectors[0].levels, rng);
    const std::vector<Index> swapped{1, 0};
    const CMatrix bad = correlated_density(sub, model, amps, &swapped);
    const double k_max = max_admissible_weight(d_eq, bad);
    add_check(checks, "mispaired_rejection", k_max < 1e-6, k_max, 1e-6);
  }

  {
    const RVector p =
        born_probabilities(model.system.initial_state, model.system.family);
    Substream rng(options.seed, "verify/tree");
    SubensembleNode root = random_hierarchy(p, 2000, 3, 3, rng);
    if (options.inject == "corrupt_merge") ++root.children.front().counts.front();
    const HierarchyAudit audit = hierarchy_audit(root, &p);
    add_check(checks, "hierarchy_exact", audit.consistent,
              audit.consistent ? 0.0 : 1.0, 0.0);
    if (!audit.consistent) report.summary["first_violation"] = audit.first_violation;
  }

  {
    CMatrix h3 = CMatrix::Zero(3, 3);
    h3(1, 1) = 1.0;
    h3(2, 2) = 2.0;
    CMatrix number = CMatrix::Zero(3, 3);
    number(0, 0) = 1.0;
    number(2, 2) = 1.0;
    MaxEntProblem pair;
    pair.hamiltonian = h3;
    pair.constraints = {h3, number};
    RVector theta_star(2);
    theta_star << 0.7, -0.3;
    pair.targets = RVector::Zero(2);
    pair.targets = -max_ent_dual_gradient(pair, theta_star);
    const MaxEntResult round = max_ent_solve(pair);
    const double err = (round.multipliers - theta_star).cwiseAbs().maxCoeff();
    add_check(checks, "maxent_round_trip", err <= 1e-8, err, 1e-8);
  }

  {
    Substream rng(options.seed, "verify/two_path");
    double worst = 0.0;
    for (Index trial = 0; trial < 3; ++trial) {
      const CMatrix a = gaussian_complex_matrix(cfg.d_s, cfg.d_s, rng);
      CMatrix r0 = a * a.adjoint();
      r0 /= r0.trace().real();
      GibbsianForm custom = form;
      const RVector p = born_probabilities(r0, model.system.family);
      for (Index i = 0; i < cfg.n_out; ++i) {
        custom.weights(i) = p(i);
        custom.system_states[static_cast<std::size_t>(i)] =
            luders_update(r0, model.system.family, i);
      }
      const CMatrix joint = assemble_form(custom);
      for (Index i = 0; i < cfg.n_out; ++i) {
        const CMatrix via_joint =
            partial_trace(select_outcome(joint, model, i), cfg.d_s,
                          model.apparatus.dim, Subsystem::kFirst);
        const CMatrix via_system = luders_update(r0, model.system.family, i);
        worst = std::max(worst, max_abs_diff(via_joint, via_system));
      }
    }
    add_check(checks, "two_path_reduction", worst <= kStructuralTol, worst,
              kStructuralTol);
  }

  report.pass = true;
  for (const CheckResult& c : checks) report.pass = report.pass && c.pass;
  report.summary["component"] = "verify";
  report.summary["inject"] = options.inject;
  report.summary["seed"] = options.seed;
  report.summary["pass"] = report.pass;
  report.summary["checks"] = checks_to_json(checks);
  return report;
}

}  // namespace qmsim
