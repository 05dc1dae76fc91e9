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

#include "qmsim/model_factory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "qmsim/rng.hpp"

namespace qmsim {

namespace {

void require(bool condition, const std::string& message) {
  if (!condition) throw std::invalid_argument(message);
}

}  // namespace

ProjectorFamily projector_family(const CMatrix& observable, double degeneracy_tol) {
  const HermitianEigen eig = hermitian_eigen(observable);
  const Index d = eig.values.size();

  std::vector<Index> order(d);
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(),
            [&](Index a, Index b) { return eig.values(a) > eig.values(b); });

  ProjectorFamily family;
  Index pos = 0;
  while (pos < d) {
    Index end = pos + 1;
    while (end < d && std::abs(eig.values(order[end]) - eig.values(order[pos])) <=
                          degeneracy_tol)
      ++end;
    CMatrix proj = CMatrix::Zero(d, d);
    double value = 0.0;
    for (Index k = pos; k < end; ++k) {
      proj += pure_density(eig.vectors.col(order[k]));
      value += eig.values(order[k]);
    }
    family.outcomes.push_back(value / static_cast<double>(end - pos));
    family.projectors.push_back(proj);
    pos = end;
  }
  return family;
}

TestedSystemSpec make_tested_system(const CMatrix& observable, const CMatrix& h_s,
                                    const CMatrix& r0) {
  TestedSystemSpec spec;
  spec.dim = observable.rows();
  require(h_s.rows() == spec.dim && h_s.cols() == spec.dim,
          "make_tested_system: H_S dimension mismatch");
  require(r0.rows() == spec.dim && r0.cols() == spec.dim,
          "make_tested_system: r0 dimension mismatch");
  require(max_abs(h_s - h_s.adjoint()) <= kStructuralTol,
          "make_tested_system: H_S not Hermitian");
  const DensityCheck rc = check_density(r0);
  require(rc.ok, "make_tested_system: r0 is not a density operator");

  spec.hamiltonian = h_s;
  spec.initial_state = r0;
  spec.family = projector_family(observable);

  // H_S must preserve each outcome sector and leave the initial state
  // stationary, otherwise the frozen system-side blocks are not exact.
  for (const CMatrix& proj : spec.family.projectors)
    require(max_abs(commutator(h_s, proj)) <= kStructuralTol,
            "make_tested_system: H_S mixes outcome sectors");
  require(max_abs(commutator(h_s, r0)) <= kStructuralTol,
          "make_tested_system: H_S does not commute with the initial state");
  return spec;
}

CMatrix ApparatusSpec::sector_projector(Index i) const {
  require(i >= 0 && i < n_sectors(), "sector_projector: invalid sector");
  CMatrix p = CMatrix::Zero(dim, dim);
  const ApparatusSector& s = sectors[static_cast<std::size_t>(i)];
  for (Index z = s.offset; z < s.offset + s.levels; ++z) p(z, z) = 1.0;
  return p;
}

CMatrix ApparatusSpec::pointer_observable() const {
  CMatrix a = CMatrix::Zero(dim, dim);
  for (Index z = 0; z < dim; ++z) a(z, z) = pointer_diag(z);
  return a;
}

CMatrix ApparatusSpec::dense_hamiltonian() const {
  if (!diagonal) return hamiltonian;
  CMatrix h = CMatrix::Zero(dim, dim);
  for (Index z = 0; z < dim; ++z) h(z, z) = hamiltonian_diag(z);
  return h;
}

CMatrix ApparatusSpec::dense_source(Index i) const {
  if (!diagonal) return sources[static_cast<std::size_t>(i)];
  CMatrix h = CMatrix::Zero(dim, dim);
  for (Index z = 0; z < dim; ++z) h(z, z) = source_diags[static_cast<std::size_t>(i)](z);
  return h;
}

CMatrix ApparatusSpec::dense_initial_state() const {
  if (!diagonal) return initial_state;
  CMatrix r = CMatrix::Zero(dim, dim);
  for (Index z = 0; z < dim; ++z) r(z, z) = initial_diag(z);
  return r;
}

ApparatusSpec make_dephasing_apparatus(Index n_out, Index subunits,
                                       const RVector& couplings,
                                       const std::vector<double>& sector_signs) {
  require(subunits >= 1 && subunits <= 14,
          "make_dephasing_apparatus: subunit count outside [1, 14]");
  require(couplings.size() == subunits,
          "make_dephasing_apparatus: need one coupling per subunit");
  require(static_cast<Index>(sector_signs.size()) == n_out,
          "make_dephasing_apparatus: need one sign per outcome");

  ApparatusSpec spec;
  spec.diagonal = true;
  spec.dim = Index{1} << subunits;
  spec.sectors = {{0.0, spec.dim, 0}};
  spec.pointer_gap = 0.0;
  spec.hamiltonian_diag = RVector::Zero(spec.dim);
  spec.pointer_diag = RVector::Zero(spec.dim);
  spec.initial_diag =
      RVector::Constant(spec.dim, 1.0 / static_cast<double>(spec.dim));

  // Base field sum_m g_m Z_m; bit m clear means Z_m = +1.
  RVector field = RVector::Zero(spec.dim);
  for (Index z = 0; z < spec.dim; ++z) {
    double v = 0.0;
    for (Index m = 0; m < subunits; ++m)
      v += ((z >> m) & 1) ? -couplings(m) : couplings(m);
    field(z) = v;
  }
  for (double c : sector_signs) spec.source_diags.push_back(c * field);
  return spec;
}

RVector draw_dephasing_couplings(Index subunits, double lo, double hi,
                                 std::uint64_t master_seed) {
  require(hi >= lo, "draw_dephasing_couplings: empty range");
  Substream rng(master_seed, "apparatus/couplings");
  RVector g(subunits);
  for (Index m = 0; m < subunits; ++m) g(m) = lo + (hi - lo) * rng.next_double();
  return g;
}

std::vector<double> default_pointer_values(Index n_out) {
  std::vector<double> values(static_cast<std::size_t>(n_out));
  for (Index i = 0; i < n_out; ++i)
    values[static_cast<std::size_t>(i)] =
        0.5 * static_cast<double>(n_out - 1) - static_cast<double>(i);
  return values;
}

ApparatusSpec make_ergodic_apparatus(Index n_out, Index sector_levels,
                                     double bandwidth, double source_strength,
                                     const std::vector<double>& pointer_values,
                                     std::uint64_t master_seed) {
  require(n_out >= 1, "make_ergodic_apparatus: need at least one sector");
  require(sector_levels >= 2, "make_ergodic_apparatus: need G >= 2");
  require(bandwidth > 0.0, "make_ergodic_apparatus: bandwidth must be positive");
  require(static_cast<Index>(pointer_values.size()) == n_out,
          "make_ergodic_apparatus: need one pointer value per sector");

  ApparatusSpec spec;
  spec.diagonal = false;
  spec.dim = n_out * sector_levels;
  spec.hamiltonian = CMatrix::Zero(spec.dim, spec.dim);
  spec.initial_state = CMatrix::Zero(spec.dim, spec.dim);
  spec.pointer_diag = RVector::Zero(spec.dim);

  double gap = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < n_out; ++i)
    for (Index j = i + 1; j < n_out; ++j)
      gap = std::min(gap, std::abs(pointer_values[static_cast<std::size_t>(i)] -
                                   pointer_values[static_cast<std::size_t>(j)]));
  spec.pointer_gap = (n_out > 1) ? gap : 0.0;
  require(n_out == 1 || spec.pointer_gap > 0.0,
          "make_ergodic_apparatus: pointer values must be pairwise distinct");

  // Metastable initial state: each sector starts uniformly occupied over the
  // lower half of its levels, with no sector preferred.  That occupation is
  // diagonal in the level basis, not in the sector block's eigenbasis, so the
  // intra-sector dynamics spreads it over the whole sector while the sector
  // weights stay fixed.
  const Index half = std::max<Index>(1, sector_levels / 2);
  const double weight = 1.0 / static_cast<double>(n_out * half);

  for (Index i = 0; i < n_out; ++i) {
    const Index off = i * sector_levels;
    spec.sectors.push_back(
        {pointer_values[static_cast<std::size_t>(i)], sector_levels, off});
    Substream rng(master_seed, "apparatus/gue/sector", static_cast<std::uint64_t>(i));
    const CMatrix block = random_gue(sector_levels, bandwidth, rng);
    spec.hamiltonian.block(off, off, sector_levels, sector_levels) = block;
    for (Index z = off; z < off + sector_levels; ++z)
      spec.pointer_diag(z) = pointer_values[static_cast<std::size_t>(i)];
    for (Index k = 0; k < half; ++k) spec.initial_state(off + k, off + k) = weight;
  }

  for (Index i = 0; i < n_out; ++i)
    spec.sources.push_back(CMatrix(-source_strength * spec.sector_projector(i)));
  return spec;
}

std::vector<double> uniform_grid(double t_end, Index points) {
  require(points >= 2 && t_end > 0.0, "uniform_grid: need >= 2 points, t_end > 0");
  std::vector<double> times(static_cast<std::size_t>(points));
  for (Index k = 0; k < points; ++k)
    times[static_cast<std::size_t>(k)] =
        t_end * static_cast<double>(k) / static_cast<double>(points - 1);
  return times;
}

std::vector<double> time_grid(const ScheduleSpec& schedule) {
  const Index n = schedule.grid_points;
  require(n >= 2, "time_grid: need at least 2 points");
  if (n == 2) return {0.0, schedule.t_f};

  // Dense geometric coverage of the early decade(s), then a uniform sweep.
  const double t_f = schedule.t_f;
  const double t_lo = t_f * 1e-3;
  const double t_mid = t_f * 0.1;
  const Index n_geo = n / 4;
  const Index n_lin = n - 1 - n_geo;

  std::vector<double> times;
  times.reserve(static_cast<std::size_t>(n));
  times.push_back(0.0);
  for (Index k = 0; k < n_geo; ++k) {
    const double frac = (n_geo == 1)
                            ? 1.0
                            : static_cast<double>(k) / static_cast<double>(n_geo - 1);
    times.push_back(t_lo * std::pow(t_mid / t_lo, frac));
  }
  for (Index j = 1; j <= n_lin; ++j)
    times.push_back(t_mid + (t_f - t_mid) * static_cast<double>(j) /
                                static_cast<double>(n_lin));
  times.back() = t_f;
  return times;
}

CMatrix build_coupling(const ProjectorFamily& family,
                       const std::vector<CMatrix>& sources) {
  require(sources.size() == family.projectors.size(),
          "build_coupling: one source per projector required");
  require(!sources.empty(), "build_coupling: empty family");
  const Index d_a = sources.front().rows();
  const Index d_s = family.dim();
  CMatrix coupling = CMatrix::Zero(d_s * d_a, d_s * d_a);
  for (std::size_t i = 0; i < sources.size(); ++i) {
    require(sources[i].rows() == d_a && sources[i].cols() == d_a,
            "build_coupling: source dimension mismatch");
    require(max_abs(sources[i] - sources[i].adjoint()) <= kStructuralTol,
            "build_coupling: source " + std::to_string(i) + " not Hermitian");
    coupling += tensor(family.projectors[i], sources[i]);
  }
  return coupling;
}

MeasurementModel assemble_model(TestedSystemSpec system, ApparatusSpec apparatus,
                                ScheduleSpec schedule, double beta,
                                std::uint64_t seed) {
  require(apparatus.n_sources() == system.family.n_out(),
          "assemble_model: apparatus needs one source per outcome");
  require(schedule.t_off > 0.0 && schedule.t_off <= schedule.t_split &&
              schedule.t_split <= schedule.t_f && schedule.t_f > 0.0,
          "assemble_model: schedule must satisfy 0 < t_off <= t_split <= t_f");
  require(beta >= 0.0, "assemble_model: beta must be non-negative");

  MeasurementModel model;
  model.system = std::move(system);
  model.apparatus = std::move(apparatus);
  model.schedule = schedule;
  model.beta = beta;
  model.seed = seed;
  if (!model.apparatus.diagonal && model.joint_dim() <= kMaxJointDim) {
    std::vector<CMatrix> sources;
    for (Index i = 0; i < model.apparatus.n_sources(); ++i)
      sources.push_back(model.apparatus.dense_source(i));
    model.coupling = build_coupling(model.system.family, sources);
  }
  return model;
}

CMatrix full_hamiltonian(const MeasurementModel& model, bool coupled) {
  require(model.coupling.size() > 0,
          "full_hamiltonian: dense coupling not materialized for this model");
  const Index d_s = model.system.dim;
  const Index d_a = model.apparatus.dim;
  CMatrix h = tensor(model.system.hamiltonian, CMatrix::Identity(d_a, d_a)) +
              tensor(CMatrix::Identity(d_s, d_s), model.apparatus.dense_hamiltonian());
  if (coupled) h += model.coupling;
  return h;
}

IdealityReport validate_ideality(const MeasurementModel& model) {
  IdealityReport report;
  const ProjectorFamily& family = model.system.family;
  const Index d_s = model.system.dim;
  const Index n = family.n_out();

  CMatrix sum = CMatrix::Zero(d_s, d_s);
  for (Index i = 0; i < n; ++i) {
    const CMatrix& pi = family.projectors[static_cast<std::size_t>(i)];
    sum += pi;
    for (Index j = 0; j < n; ++j) {
      const CMatrix& pj = family.projectors[static_cast<std::size_t>(j)];
      const CMatrix prod = pi * pj;
      const double defect = (i == j) ? max_abs_diff(prod, pi) : max_abs(prod);
      report.projector_defect = std::max(report.projector_defect, defect);
    }
  }
  report.projector_defect =
      std::max(report.projector_defect, max_abs_diff(sum, CMatrix::Identity(d_s, d_s)));

  report.system_state_defect =
      max_abs(commutator(model.system.hamiltonian, model.system.initial_state));

  // [A_hat, H_A] entries are (A_z - A_z') (H_A)_{zz'}; zero on the diagonal
  // path since both operators are diagonal there.
  if (!model.apparatus.diagonal) {
    const CMatrix& h_a = model.apparatus.hamiltonian;
    for (Index z = 0; z < model.apparatus.dim; ++z)
      for (Index w = 0; w < model.apparatus.dim; ++w) {
        const double defect = std::abs(
            (model.apparatus.pointer_diag(z) - model.apparatus.pointer_diag(w)) *
            std::abs(h_a(z, w)));
        report.pointer_defect = std::max(report.pointer_defect, defect);
      }
  }

  if (model.coupling.size() > 0) {
    std::vector<CMatrix> sources;
    for (Index i = 0; i < model.apparatus.n_sources(); ++i)
      sources.push_back(model.apparatus.dense_source(i));
    report.coupling_rebuild_defect =
        max_abs_diff(model.coupling, build_coupling(family, sources));

    // Full dense commutators against each sector projector on the joint
    // space, which also catches injected sector-mixing couplings.
    const CMatrix h = full_hamiltonian(model, true);
    const CMatrix id_a = CMatrix::Identity(model.apparatus.dim, model.apparatus.dim);
    for (Index k = 0; k < n; ++k) {
      const CMatrix pk = tensor(family.projectors[static_cast<std::size_t>(k)], id_a);
      report.sector_commutant_defect =
          std::max(report.sector_commutant_defect, max_abs(commutator(h, pk)));
    }
  } else {
    // Structured evaluation without forming the joint space: the apparatus
    // block of [H, Pi_k (x) I] at system entry (a,b) is
    // [H_S, Pi_k]_{ab} I_A + sum_i [Pi_i, Pi_k]_{ab} h_i (all diagonal here).
    for (Index k = 0; k < n; ++k) {
      const CMatrix& pk = family.projectors[static_cast<std::size_t>(k)];
      const CMatrix hs_comm = commutator(model.system.hamiltonian, pk);
      std::vector<CMatrix> pi_comms;
      for (Index i = 0; i < n; ++i)
        pi_comms.push_back(
            commutator(family.projectors[static_cast<std::size_t>(i)], pk));
      for (Index a = 0; a < d_s; ++a)
        for (Index b = 0; b < d_s; ++b) {
          for (Index z = 0; z < model.apparatus.dim; ++z) {
            Complex entry = hs_comm(a, b);
            for (Index i = 0; i < n; ++i)
              entry += pi_comms[static_cast<std::size_t>(i)](a, b) *
                       model.apparatus.source_diags[static_cast<std::size_t>(i)](z);
            report.sector_commutant_defect =
                std::max(report.sector_commutant_defect, std::abs(entry));
          }
        }
    }
  }

  report.ok = report.projector_defect <= kStructuralTol &&
              report.sector_commutant_defect <= kStructuralTol &&
              report.system_state_defect <= kStructuralTol &&
              report.pointer_defect <= kStructuralTol &&
              report.coupling_rebuild_defect <= kStructuralTol;
  return report;
}

ApparatusSpec densify(const ApparatusSpec& apparatus) {
  if (!apparatus.diagonal) return apparatus;
  ApparatusSpec dense = apparatus;
  dense.diagonal = false;
  dense.hamiltonian = apparatus.dense_hamiltonian();
  dense.initial_state = apparatus.dense_initial_state();
  dense.sources.clear();
  for (Index i = 0; i < apparatus.n_sources(); ++i)
    dense.sources.push_back(apparatus.dense_source(i));
  dense.hamiltonian_diag.resize(0);
  dense.initial_diag.resize(0);
  dense.source_diags.clear();
  return dense;
}

}  // namespace qmsim
