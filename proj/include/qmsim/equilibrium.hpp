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

#ifndef QMSIM_EQUILIBRIUM_HPP_
#define QMSIM_EQUILIBRIUM_HPP_

#include <stdexcept>
#include <vector>

#include "qmsim/model_factory.hpp"
#include "qmsim/types.hpp"

namespace qmsim {

enum class EquilibriumFlavor { kCanonical, kMicrocanonical };

// Weighted product structure sum_i q_i x_i (x) R_i.  x_i live on the system
// and are supported inside outcome block i; R_i live on the apparatus.
// Blocks with vanishing weight keep empty matrices and defined[i] = false
// rather than fabricated states.
struct GibbsianForm {
  EquilibriumFlavor flavor = EquilibriumFlavor::kMicrocanonical;
  RVector weights;
  std::vector<CMatrix> system_states;
  std::vector<CMatrix> apparatus_states;
  std::vector<bool> defined;
};

// Normalized exp(-beta (H_A + h_i)); the spectrum is shifted by its minimum
// before exponentiating so large beta cannot overflow.
CMatrix canonical_sector_state(const CMatrix& h_a, const CMatrix& h_i, double beta);
RVector canonical_sector_diag(const RVector& h_a_diag, const RVector& h_i_diag,
                              double beta);

// Uniform mixture over the G_i levels of sector i, zero elsewhere.
CMatrix microcanonical_state(const ApparatusSpec& apparatus, Index sector);

// Weight of sector i in an apparatus state: tr(P_i R).
double sector_weight(const CMatrix& apparatus_state, const ApparatusSpec& apparatus,
                     Index sector);

// Weight outside sector i of the canonical sector state, reported as a
// diagnostic of how sharply the source pins the pointer.
double canonical_sector_leakage(const MeasurementModel& model, Index sector);

// The expected equilibrium form of a model: Born weights, conditional system
// blocks, and canonical (while coupled) or microcanonical (after switch-off)
// apparatus states.
GibbsianForm equilibrium_form(const MeasurementModel& model, EquilibriumFlavor flavor);

struct EquilibriumFit {
  GibbsianForm form;
  double offdiag_mass = 0.0;      // sum of Frobenius norms of i != j blocks
  double residual = 0.0;          // trace distance to the reconstructed form
};

// Splits a joint state into outcome blocks, extracts weights and normalized
// sector states, and reports how far the input is from the fitted
// sum_i q_i x_i (x) R_i structure.
EquilibriumFit identify_equilibrium(const CMatrix& joint, const MeasurementModel& model,
                                    EquilibriumFlavor flavor);

// Reconstructs sum_i q_i x_i (x) R_i as a dense operator.
CMatrix assemble_form(const GibbsianForm& form);

// Validates the structural invariants of a form against a projector family.
struct FormCheck {
  double weight_sum_defect = 0.0;
  double min_weight = 0.0;
  double block_support_defect = 0.0;  // max ||x_i - Pi_i x_i Pi_i||
  bool ok = false;
};
FormCheck check_form(const GibbsianForm& form, const ProjectorFamily& family);

// ---------------------------------------------------------------------------
// Maximum-entropy solver.

// Constraints are Hermitian observables; the first is conventionally the
// energy, so multipliers[0] plays the role of beta.  The solution has the
// exact exponential form exp(-sum_k theta_k C_k)/Z.
struct MaxEntProblem {
  CMatrix hamiltonian;
  std::vector<CMatrix> constraints;
  RVector targets;
};

// Energy constraint plus a Hermitian basis of each diagonal block
// Pi_i M Pi_i, the observables conserved by an ideal measurement.
std::vector<CMatrix> conserved_observable_basis(const ProjectorFamily& family);

class InfeasibleTargets : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MaxEntResult {
  CMatrix state;
  RVector multipliers;
  Index iterations = 0;
  double constraint_residual = 0.0;
};

// Newton iteration on the convex dual with backtracking line search.
// Throws InfeasibleTargets when a target sits outside (or on the edge of)
// an observable's spectral range; throws std::runtime_error when the
// iteration cap is hit.
MaxEntResult max_ent_solve(const MaxEntProblem& problem, double tol = 1e-10,
                           Index max_iterations = 200);

// Dual objective ln tr exp(-sum theta_k C_k) + theta . targets and its
// analytic gradient, exposed for verification.
double max_ent_dual(const MaxEntProblem& problem, const RVector& theta);
RVector max_ent_dual_gradient(const MaxEntProblem& problem, const RVector& theta);

}  // namespace qmsim

#endif  // QMSIM_EQUILIBRIUM_HPP_
