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

#ifndef QMSIM_ENSEMBLE_STATISTICS_HPP_
#define QMSIM_ENSEMBLE_STATISTICS_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "qmsim/model_factory.hpp"
#include "qmsim/rng.hpp"
#include "qmsim/types.hpp"

namespace qmsim {

// Outcome weights, either analytic (probabilities) or empirical (counts out
// of `runs` samples; probabilities are the normalized counts).
struct OutcomeDistribution {
  RVector probabilities;
  bool empirical = false;
  long long runs = 0;
  std::vector<long long> counts;
};

RVector born_probabilities(const CMatrix& r0, const ProjectorFamily& family);
OutcomeDistribution born_distribution(const CMatrix& r0, const ProjectorFamily& family);

// Conditional system state Pi_i r0 Pi_i / p_i.  Throws on outcomes with
// probability below the conditioning cutoff instead of renormalizing noise.
CMatrix luders_update(const CMatrix& r0, const ProjectorFamily& family, Index outcome);

// Post-measurement mixture sum_i Pi_i r0 Pi_i.
CMatrix luders_mixture(const CMatrix& r0, const ProjectorFamily& family);

// Conditional joint state after reading pointer value i:
// (I (x) P_i) D (I (x) P_i) / weight.
CMatrix select_outcome(const CMatrix& joint, const MeasurementModel& model,
                       Index outcome);

// Multinomial sample of N runs, deterministic per (seed, label).
std::vector<long long> sample_runs(const RVector& probabilities, long long n,
                                   Substream& rng);
std::vector<long long> sample_runs(const OutcomeDistribution& dist, long long n,
                                   std::uint64_t master_seed);

// A subensemble of runs: counts per outcome out of `runs` samples, with
// optional children partitioning it further.  Counts are integers so the
// merge law is exact arithmetic; weights float only at presentation.
struct SubensembleNode {
  long long runs = 0;
  std::vector<long long> counts;
  std::vector<SubensembleNode> children;
  RVector weights() const;
};

// Parent carrying the exact count sums of its children.
SubensembleNode merge_subensembles(std::vector<SubensembleNode> children);

struct HierarchyAudit {
  bool consistent = false;            // every internal node sums exactly
  std::string first_violation;        // path like "root/2/0" when not
  bool born_checked = false;
  bool born_within_bounds = false;    // root counts vs 3 sigma multinomial
  RVector deviations;                 // |count_i/N - p_i|
  RVector bounds;                     // 3 sqrt(p_i (1-p_i)/N)
};

// Verifies the exact additivity of counts at every internal node, and
// optionally the root frequencies against Born probabilities within the
// 3-sigma multinomial envelope.
HierarchyAudit hierarchy_audit(const SubensembleNode& root,
                               const RVector* born = nullptr);

// Random tree of the given depth whose leaves hold independent multinomial
// samples; internal nodes are exact merges of their children.
SubensembleNode random_hierarchy(const RVector& probabilities, long long runs,
                                 Index depth, Index max_children, Substream& rng);

}  // namespace qmsim

#endif  // QMSIM_ENSEMBLE_STATISTICS_HPP_
