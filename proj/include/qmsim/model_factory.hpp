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

#ifndef QMSIM_MODEL_FACTORY_HPP_
#define QMSIM_MODEL_FACTORY_HPP_

#include <cstdint>
#include <vector>

#include "qmsim/operator_algebra.hpp"
#include "qmsim/types.hpp"

namespace qmsim {

// Eigenprojectors of the measured observable, one per distinct outcome.
struct ProjectorFamily {
  std::vector<double> outcomes;      // s_i, pairwise distinct
  std::vector<CMatrix> projectors;   // Pi_i
  Index n_out() const { return static_cast<Index>(projectors.size()); }
  Index dim() const { return projectors.empty() ? 0 : projectors.front().rows(); }
};

// Builds the family from an observable by grouping eigenvalues closer than
// degeneracy_tol.  Outcomes are ordered by descending eigenvalue.
ProjectorFamily projector_family(const CMatrix& observable,
                                 double degeneracy_tol = kDegeneracyTol);

struct TestedSystemSpec {
  Index dim = 0;
  CMatrix hamiltonian;      // H_S
  CMatrix initial_state;    // r(0)
  ProjectorFamily family;
};

TestedSystemSpec make_tested_system(const CMatrix& observable, const CMatrix& h_s,
                                    const CMatrix& r0);

// Apparatus with a sectored level structure.  A sector is a group of levels
// sharing one pointer value; the pointer observable is diagonal with that
// value across the sector.
//
// Two realizations are provided.  The ergodic apparatus stores dense
// operators.  The dephasing apparatus is diagonal in the level basis and
// stores only diagonals, which keeps M = 12 (4096 levels) cheap; `diagonal`
// marks that fast path and the dense members stay empty.
struct ApparatusSector {
  double pointer_value = 0.0;
  Index levels = 0;
  Index offset = 0;
};

struct ApparatusSpec {
  std::vector<ApparatusSector> sectors;
  Index dim = 0;
  double pointer_gap = 0.0;          // declared minimal |A_i - A_j| separation
  bool diagonal = false;

  CMatrix hamiltonian;               // H_A (dense path)
  std::vector<CMatrix> sources;      // h_i (dense path)
  CMatrix initial_state;             // R(0) (dense path)

  RVector hamiltonian_diag;          // diagonal path
  std::vector<RVector> source_diags;
  RVector initial_diag;

  RVector pointer_diag;              // A_hat entries, always stored

  Index n_sectors() const { return static_cast<Index>(sectors.size()); }
  Index n_sources() const {
    return static_cast<Index>(diagonal ? source_diags.size() : sources.size());
  }
  CMatrix sector_projector(Index i) const;
  CMatrix pointer_observable() const;
  CMatrix dense_hamiltonian() const;
  CMatrix dense_source(Index i) const;
  CMatrix dense_initial_state() const;
};

// Analytically solvable decoherence apparatus: M two-level subunits with
// H_A = 0 and sources h_i = c_i * sum_m g_m Z_m.  With R(0) = I/2^M the
// off-diagonal trace factor is exactly prod_m cos((c_i - c_j) g_m t).
// One physical sector; the outcome dependence enters through the signs c_i.
ApparatusSpec make_dephasing_apparatus(Index n_out, Index subunits,
                                       const RVector& couplings,
                                       const std::vector<double>& sector_signs);

// Draws couplings g_m uniform in [lo, hi] from the named substream
// "apparatus/couplings" of the master seed.
RVector draw_dephasing_couplings(Index subunits, double lo, double hi,
                                 std::uint64_t master_seed);

// Apparatus with n_out sectors of G levels; each sector carries an
// independent GUE block of bandwidth w (semicircle edge ~ 2w), so the
// intra-sector dynamics mix levels generically.  Sources shift sector i
// down by source_strength, which concentrates the canonical sector state.
// The initial state is metastable: uniform over the lower half of each
// sector's spectrum, unbiased across sectors.
ApparatusSpec make_ergodic_apparatus(Index n_out, Index sector_levels,
                                     double bandwidth, double source_strength,
                                     const std::vector<double>& pointer_values,
                                     std::uint64_t master_seed);

// Default pointer values for a list of outcomes: ranks rescaled to unit
// adjacent gaps, centered at zero.
std::vector<double> default_pointer_values(Index n_out);

struct ScheduleSpec {
  double t_off = 1.0;
  double t_split = 2.0;
  double t_f = 50.0;
  Index grid_points = 200;
};

// Geometric-then-linear output grid: 0, then dense early times, then a
// uniform sweep to t_f.  Strictly increasing, ends at t_f.
std::vector<double> time_grid(const ScheduleSpec& schedule);
std::vector<double> uniform_grid(double t_end, Index points);

struct MeasurementModel {
  TestedSystemSpec system;
  ApparatusSpec apparatus;
  CMatrix coupling;                  // H_SA, materialized on the dense path
  ScheduleSpec schedule;
  double beta = 1.0;
  std::uint64_t seed = 0;
  Index joint_dim() const { return system.dim * apparatus.dim; }
};

// sum_i Pi_i (x) h_i on the joint space.
CMatrix build_coupling(const ProjectorFamily& family,
                       const std::vector<CMatrix>& sources);

// Assembles and validates a model.  The coupling is materialized from the
// parts whenever the joint space fits densely; the diagonal fast path keeps
// it implicit.
MeasurementModel assemble_model(TestedSystemSpec system, ApparatusSpec apparatus,
                                ScheduleSpec schedule, double beta,
                                std::uint64_t seed);

// H_S (x) I + I (x) H_A (+ H_SA while the coupling is on).  Dense path only.
CMatrix full_hamiltonian(const MeasurementModel& model, bool coupled);

struct IdealityReport {
  double projector_defect = 0.0;        // completeness + orthogonality
  double sector_commutant_defect = 0.0; // [H, Pi_i (x) I] over all i
  double system_state_defect = 0.0;     // [H_S, r0]
  double pointer_defect = 0.0;          // [A_hat, H_A]
  double coupling_rebuild_defect = 0.0; // stored H_SA vs sum Pi_i (x) h_i
  bool ok = false;
};

IdealityReport validate_ideality(const MeasurementModel& model);

// Dense copy of a diagonal-path apparatus, for cross-checks at small M.
ApparatusSpec densify(const ApparatusSpec& apparatus);

}  // namespace qmsim

#endif  // QMSIM_MODEL_FACTORY_HPP_
