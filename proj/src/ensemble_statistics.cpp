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

#include "qmsim/ensemble_statistics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qmsim {

namespace {

constexpr double kConditioningCutoff = 1e-12;

}  // namespace

RVector born_probabilities(const CMatrix& r0, const ProjectorFamily& family) {
  RVector p(family.n_out());
  for (Index i = 0; i < family.n_out(); ++i)
    p(i) = (family.projectors[static_cast<std::size_t>(i)] * r0).trace().real();
  return p;
}

OutcomeDistribution born_distribution(const CMatrix& r0, const ProjectorFamily& family) {
  OutcomeDistribution dist;
  dist.probabilities = born_probabilities(r0, family);
  dist.empirical = false;
  return dist;
}

CMatrix luders_update(const CMatrix& r0, const ProjectorFamily& family, Index outcome) {
  if (outcome < 0 || outcome >= family.n_out())
    throw std::invalid_argument("luders_update: invalid outcome");
  const CMatrix& pi = family.projectors[static_cast<std::size_t>(outcome)];
  const CMatrix block = pi * r0 * pi;
  const double p = block.trace().real();
  if (p <= kConditioningCutoff)
    throw std::invalid_argument("luders_update: outcome probability below cutoff");
  return block / p;
}

CMatrix luders_mixture(const CMatrix& r0, const ProjectorFamily& family) {
  CMatrix out = CMatrix::Zero(r0.rows(), r0.cols());
  for (const CMatrix& pi : family.projectors) out += pi * r0 * pi;
  return out;
}

CMatrix select_outcome(const CMatrix& joint, const MeasurementModel& model,
                       Index outcome) {
  const Index n_sectors = model.apparatus.n_sectors();
  if (outcome < 0 || outcome >= model.system.family.n_out())
    throw std::invalid_argument("select_outcome: invalid outcome");
  const Index sector = std::min<Index>(outcome, n_sectors - 1);
  const CMatrix p_joint =
      tensor(CMatrix::Identity(model.system.dim, model.system.dim),
             model.apparatus.sector_projector(sector));
  const CMatrix projected = p_joint * joint * p_joint;
  const double weight = projected.trace().real();
  if (weight <= kConditioningCutoff)
    throw std::invalid_argument("select_outcome: sector weight below cutoff");
  return projected / weight;
}

std::vector<long long> sample_runs(const RVector& probabilities, long long n,
                                   Substream& rng) {
  if (n < 0) throw std::invalid_argument("sample_runs: negative run count");
  const Index k = probabilities.size();
  std::vector<long long> counts(static_cast<std::size_t>(k), 0);
  for (long long r = 0; r < n; ++r) {
    const double u = rng.next_double();
    double acc = 0.0;
    Index pick = k - 1;
    for (Index i = 0; i < k; ++i) {
      acc += probabilities(i);
      if (u < acc) {
        pick = i;
        break;
      }
    }
    ++counts[static_cast<std::size_t>(pick)];
  }
  return counts;
}

std::vector<long long> sample_runs(const OutcomeDistribution& dist, long long n,
                                   std::uint64_t master_seed) {
  Substream rng(master_seed, "runs/sample");
  return sample_runs(dist.probabilities, n, rng);
}

RVector SubensembleNode::weights() const {
  RVector w = RVector::Zero(static_cast<Index>(counts.size()));
  if (runs == 0) return w;
  for (Index i = 0; i < w.size(); ++i)
    w(i) = static_cast<double>(counts[static_cast<std::size_t>(i)]) /
           static_cast<double>(runs);
  return w;
}

SubensembleNode merge_subensembles(std::vector<SubensembleNode> children) {
  if (children.empty())
    throw std::invalid_argument("merge_subensembles: empty child list");
  SubensembleNode parent;
  parent.counts.assign(children.front().counts.size(), 0);
  for (const SubensembleNode& child : children) {
    if (child.counts.size() != parent.counts.size())
      throw std::invalid_argument("merge_subensembles: outcome count mismatch");
    parent.runs += child.runs;
    for (std::size_t i = 0; i < parent.counts.size(); ++i)
      parent.counts[i] += child.counts[i];
  }
  parent.children = std::move(children);
  return parent;
}

namespace {

bool audit_node(const SubensembleNode& node, const std::string& path,
                std::string& violation) {
  long long total = 0;
  for (long long c : node.counts) {
    if (c < 0) {
      violation = path + " (negative count)";
      return false;
    }
    total += c;
  }
  if (total != node.runs) {
    violation = path + " (counts do not sum to runs)";
    return false;
  }
  if (node.children.empty()) return true;

  long long child_runs = 0;
  std::vector<long long> child_counts(node.counts.size(), 0);
  for (const SubensembleNode& child : node.children) {
    if (child.counts.size() != node.counts.size()) {
      violation = path + " (child outcome count mismatch)";
      return false;
    }
    child_runs += child.runs;
    for (std::size_t i = 0; i < child_counts.size(); ++i)
      child_counts[i] += child.counts[i];
  }
  if (child_runs != node.runs || child_counts != node.counts) {
    violation = path + " (children do not merge to parent)";
    return false;
  }
  for (std::size_t c = 0; c < node.children.size(); ++c) {
    if (!audit_node(node.children[c], path + "/" + std::to_string(c), violation))
      return false;
  }
  return true;
}

}  // namespace

HierarchyAudit hierarchy_audit(const SubensembleNode& root, const RVector* born) {
  HierarchyAudit audit;
  audit.consistent = audit_node(root, "root", audit.first_violation);
  if (born != nullptr) {
    audit.born_checked = true;
    const Index k = born->size();
    audit.deviations = RVector::Zero(k);
    audit.bounds = RVector::Zero(k);
    const double n = static_cast<double>(root.runs);
    bool ok = root.counts.size() == static_cast<std::size_t>(k) && root.runs > 0;
    if (ok) {
      for (Index i = 0; i < k; ++i) {
        const double p = (*born)(i);
        audit.deviations(i) =
            std::abs(static_cast<double>(root.counts[static_cast<std::size_t>(i)]) / n -
                     p);
        audit.bounds(i) = 3.0 * std::sqrt(p * (1.0 - p) / n);
        if (audit.deviations(i) > audit.bounds(i)) ok = false;
      }
    }
    audit.born_within_bounds = ok;
  }
  return audit;
}

SubensembleNode random_hierarchy(const RVector& probabilities, long long runs,
                                 Index depth, Index max_children, Substream& rng) {
  if (depth <= 0) {
    SubensembleNode leaf;
    leaf.runs = runs;
    leaf.counts = sample_runs(probabilities, runs, rng);
    return leaf;
  }
  const Index fan = 2 + static_cast<Index>(rng.next_u64() %
                                           static_cast<std::uint64_t>(
                                               std::max<Index>(1, max_children - 1)));
  // Random composition of the run budget across children.
  const RVector uniform = RVector::Constant(fan, 1.0 / static_cast<double>(fan));
  const std::vector<long long> split = sample_runs(uniform, runs, rng);
  std::vector<SubensembleNode> children;
  for (Index c = 0; c < fan; ++c)
    children.push_back(random_hierarchy(probabilities, split[static_cast<std::size_t>(c)],
                                        depth - 1, max_children, rng));
  return merge_subensembles(std::move(children));
}

}  // namespace qmsim
