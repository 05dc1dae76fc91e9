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

#ifndef QMSIM_BLOCK_DYNAMICS_HPP_
#define QMSIM_BLOCK_DYNAMICS_HPP_

#include <vector>

#include "qmsim/equilibrium.hpp"
#include "qmsim/model_factory.hpp"
#include "qmsim/types.hpp"

namespace qmsim {

// Joint state in block form: D(t) = sum_ij C_ij (x) R_ij(t) with the system
// coefficients C_ij = Pi_i r(0) Pi_j frozen and only the apparatus blocks
// evolving.  On the diagonal fast path every R_ij stays diagonal (complex
// phases on a real initial diagonal), so only vectors are stored.
struct BlockState {
  Index n_out = 0;
  double time = 0.0;
  bool diagonal = false;
  std::vector<CMatrix> coefficients;   // row-major (i, j)
  std::vector<CMatrix> blocks;         // dense path
  std::vector<CVector> diag_blocks;    // diagonal path

  const CMatrix& coefficient(Index i, Index j) const {
    return coefficients[static_cast<std::size_t>(i * n_out + j)];
  }
  const CMatrix& block(Index i, Index j) const {
    return blocks[static_cast<std::size_t>(i * n_out + j)];
  }
  const CVector& diag_block(Index i, Index j) const {
    return diag_blocks[static_cast<std::size_t>(i * n_out + j)];
  }
  Complex block_trace(Index i, Index j) const;
};

// C_ij = Pi_i r0 Pi_j, all R_ij = R0, t = 0.
BlockState init_blocks(const CMatrix& r0, const CMatrix& R0,
                       const ProjectorFamily& family);
BlockState init_blocks(const MeasurementModel& model);

// Exact propagation of the block equations.  While the coupling is on the
// pair (i, j) evolves as e^{-i(H_A+h_i)dt} R_ij e^{+i(H_A+h_j)dt}; after
// t_off both generators collapse to H_A.  The eigendecompositions of the
// n_out + 1 generators are done once at construction and reused for every
// pair and every time, so there is no integrator error.
class BlockPropagator {
 public:
  explicit BlockPropagator(const MeasurementModel& model);

  // Piecewise-exact evolution from state.time to t (t >= state.time).
  BlockState propagate(const BlockState& state, double t) const;

 private:
  void advance(BlockState& state, double dt, bool coupled) const;

  const MeasurementModel* model_;
  double t_off_;
  std::vector<HermitianEigen> coupled_eigs_;  // H_A + h_i per outcome
  HermitianEigen free_eig_;                   // H_A
};

// Convenience wrapper that builds a throwaway propagator.
BlockState propagate(const BlockState& state, const MeasurementModel& model, double t);

// D(t) = sum_ij C_ij (x) R_ij(t) as a dense joint operator.
CMatrix assemble_full(const BlockState& state);

// Reduced system state r(t) = sum_ij C_ij tr R_ij(t).
CMatrix reduced_system_state(const BlockState& state);

// Brute-force verifier: unitary conjugation of r0 (x) R0 under the full
// Hamiltonian on the joint space, piecewise across t_off.
class FullEvolutionOracle {
 public:
  explicit FullEvolutionOracle(const MeasurementModel& model);
  CMatrix state_at(double t) const;

 private:
  double t_off_;
  CMatrix initial_;
  HermitianEigen coupled_;
  HermitianEigen free_;
};

CMatrix oracle_full_evolution(const MeasurementModel& model, double t);

struct CoherencePairRecord {
  Index i = 0;
  Index j = 0;
  double trace_abs = 0.0;          // |tr R_ij(t)|
  double pointer_trace_abs = 0.0;  // |tr(A_hat R_ij(t))|
  double system_coherence = 0.0;   // sigma_max(C_ij) |tr R_ij(t)|
};

std::vector<CoherencePairRecord> coherence_metrics(const BlockState& state,
                                                   const MeasurementModel& model);

// Closed-form |tr R_01(t)| of the dephasing apparatus with uniform R(0):
// prod_m cos((c_i - c_j) g_m t).
double dephasing_coherence_factor(const RVector& couplings, double sign_gap, double t);

struct RegistrationRecord {
  Index i = 0;
  double weight = 0.0;               // tr C_ii (Born weight of the outcome)
  double distance_raw = 0.0;         // d(R_ii, target_i)
  double distance_conditioned = 0.0; // d(P_i R_ii P_i / w, target_i)
  double sector_weight = 0.0;        // tr(P_i R_ii)
  double pointer_expectation = 0.0;  // tr(A_hat R_ii)
  double pointer_value = 0.0;        // expected A_i
};

std::vector<RegistrationRecord> registration_metrics(const BlockState& state,
                                                     const MeasurementModel& model,
                                                     const GibbsianForm& targets);

struct FinalStateReport {
  double residual = 0.0;              // trace distance to sum_i p_i r_i (x) R_i^mu
  double max_weight_deviation = 0.0;  // |tr C_ii tr R_ii - p_i|
  double max_coherence = 0.0;         // |tr R_ij| leftovers, i != j
};

// Compares the block state against the fully decohered, registered target
// built from the Lüders system blocks and microcanonical apparatus states.
FinalStateReport final_state_check(const BlockState& state,
                                   const MeasurementModel& model);

struct ConservationReport {
  double max_trace_drift = 0.0;         // |tr R_ii(t) - 1|
  double max_weight_drift = 0.0;        // |tr C_ii tr R_ii(t) - p_i|
  double max_observable_drift = 0.0;    // sector-function expectations vs t = 0
  double max_hermiticity_defect = 0.0;  // ||R_ij - R_ji^dagger||
};

// Drift of the conserved quantities at one time point relative to the exact
// initial values.  `f_values` are the values of a spanning set of functions
// of the measured observable, one row per function.
ConservationReport conservation_check(const BlockState& state,
                                      const MeasurementModel& model,
                                      const RMatrix& f_values);

// Rows collected while sweeping the schedule grid.
struct DynamicsTrace {
  std::vector<double> times;
  std::vector<std::vector<CoherencePairRecord>> coherence;
  std::vector<std::vector<RegistrationRecord>> registration;
};

DynamicsTrace trace_dynamics(const MeasurementModel& model, const GibbsianForm& targets,
                             const std::vector<double>& times);

}  // namespace qmsim

#endif  // QMSIM_BLOCK_DYNAMICS_HPP_
