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
// Subensemble states and their relaxation toward the measurement outcome
// mixture.  A subensemble is prepared as a pure state correlated across
// outcome sectors; its amplitudes evolve per sector, its outcome weights are
// exactly conserved, and its infinite-time average is computed as a diagonal
// ensemble.  Admissible decompositions split a mixed state into positive
// components supported inside the state's own support.

#ifndef QMSIM_SUBENSEMBLES_HPP_
#define QMSIM_SUBENSEMBLES_HPP_

#include <cstdint>
#include <vector>

#include "qmsim/model_factory.hpp"
#include "qmsim/operator_algebra.hpp"
#include "qmsim/rng.hpp"
#include "qmsim/types.hpp"

namespace qmsim {

// One member of an admissible split of the run ensemble.  `amplitudes` has one
// row per outcome and one column per apparatus level of that outcome's sector;
// its Frobenius norm is 1.
struct SubensembleSpec {
  CMatrix amplitudes;
  double weight = 1.0;
  long long runs = 0;
  double t_split = 2.0;
};

// System-side frame for correlated pure states.  Requires every outcome
// projector to have rank one; the representative vectors carry a fixed phase
// convention so repeated construction is deterministic.
struct CorrelatedSubspace {
  std::vector<CVector> system_vectors;
  Index sector_levels = 0;
};

CorrelatedSubspace correlated_subspace(const MeasurementModel& model);

// Outcome weights q_i = sum_eta |amplitudes(i, eta)|^2.
RVector weights_from_amplitudes(const CMatrix& amplitudes);

CMatrix random_amplitudes(Index n_out, Index levels, Substream& rng);
SubensembleSpec random_correlated_pure(const MeasurementModel& model,
                                       std::uint64_t master_seed);

// Joint pure vector sum_i |s_i> (x) |sector(i), row i>.  `sector_map`
// overrides the default outcome-to-sector assignment; mispairing rows against
// foreign sectors produces states outside the ideal support.
CVector correlated_vector(const CorrelatedSubspace& sub, const MeasurementModel& model,
                          const CMatrix& amplitudes,
                          const std::vector<Index>* sector_map = nullptr);
CMatrix correlated_density(const CorrelatedSubspace& sub, const MeasurementModel& model,
                           const CMatrix& amplitudes,
                           const std::vector<Index>* sector_map = nullptr);

// Advances the amplitude rows from t_from to t_to under the piecewise
// schedule: row i sees its sector block of the apparatus Hamiltonian plus its
// own source before t_off, the bare block afterwards.
CMatrix evolve_amplitudes(const MeasurementModel& model, const CMatrix& amplitudes,
                          double t_from, double t_to);

// Per-time snapshot of a correlated subensemble.
struct SubensembleRecord {
  RVector weights;
  RMatrix site_populations;
  double max_cross_coherence = 0.0;
};

SubensembleRecord subensemble_record(const CMatrix& amplitudes);

// Infinite-time average of `state` under the Hamiltonian behind `eig`:
// coherence between eigenvalue groups separated by more than `grouping_tol`
// is dropped, within-group structure is kept.
CMatrix diagonal_ensemble(const CMatrix& state, const HermitianEigen& eig,
                          double grouping_tol = kDegeneracyTol);

// Discrete average of the evolved state over `samples` uniform times in
// [t_lo, t_hi], evaluated exactly in the eigenbasis.
CMatrix window_averaged_state(const CMatrix& state, const HermitianEigen& eig,
                              double t_lo, double t_hi, Index samples);

// Target mixture sum_i q_i |s_i><s_i| (x) P_sector(i) / levels.
CMatrix uniform_sector_target(const CorrelatedSubspace& sub,
                              const MeasurementModel& model, const RVector& weights);

// Populations <s_i, eta| state |s_i, eta> over outcome sectors in the site
// basis, one row per outcome.
RMatrix sector_site_populations(const CMatrix& state, const CorrelatedSubspace& sub,
                                const MeasurementModel& model);

// Split of a mixed state into unit-trace positive components with weights
// summing to one.
struct AdmissibleDecomposition {
  RVector weights;
  std::vector<CMatrix> components;
};

// Draws a random split with `parts` components through a Haar isometry over
// the state's support; requires parts >= rank.  The overload takes an explicit
// parts x rank mixer with orthonormal columns.
AdmissibleDecomposition sample_admissible_decomposition(const CMatrix& state,
                                                        Index parts,
                                                        std::uint64_t master_seed);
AdmissibleDecomposition admissible_decomposition_from_mixer(const CMatrix& state,
                                                            const CMatrix& mixer);

struct SplitCheck {
  double reconstruction_defect = 0.0;
  double weight_defect = 0.0;
  double min_component_eigenvalue = 0.0;
  double support_leakage = 0.0;
};

SplitCheck check_admissible_decomposition(const CMatrix& state,
                                          const AdmissibleDecomposition& dec);

// Largest k such that state - k * component stays positive semidefinite; zero
// when the component has weight outside the state's support.
double max_admissible_weight(const CMatrix& state, const CMatrix& component);

}  // namespace qmsim

#endif  // QMSIM_SUBENSEMBLES_HPP_
