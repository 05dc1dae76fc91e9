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

#include "qmsim/block_dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "qmsim/ensemble_statistics.hpp"

namespace qmsim {

namespace {

Index sector_for_outcome(const ApparatusSpec& apparatus, Index outcome) {
  return std::min<Index>(outcome, apparatus.n_sectors() - 1);
}

}  // namespace

Complex BlockState::block_trace(Index i, Index j) const {
  if (diagonal) return diag_block(i, j).sum();
  return block(i, j).trace();
}

BlockState init_blocks(const CMatrix& r0, const CMatrix& R0,
                       const ProjectorFamily& family) {
  if (r0.rows() != family.dim())
    throw std::invalid_argument("init_blocks: r0 does not match projector family");
  BlockState state;
  state.n_out = family.n_out();
  state.time = 0.0;
  state.diagonal = false;
  for (Index i = 0; i < state.n_out; ++i)
    for (Index j = 0; j < state.n_out; ++j) {
      state.coefficients.push_back(family.projectors[static_cast<std::size_t>(i)] * r0 *
                                   family.projectors[static_cast<std::size_t>(j)]);
      state.blocks.push_back(R0);
    }
  return state;
}

BlockState init_blocks(const MeasurementModel& model) {
  if (!model.apparatus.diagonal)
    return init_blocks(model.system.initial_state, model.apparatus.initial_state,
                       model.system.family);
  BlockState state;
  state.n_out = model.system.family.n_out();
  state.time = 0.0;
  state.diagonal = true;
  const CVector r0_diag = model.apparatus.initial_diag.cast<Complex>();
  for (Index i = 0; i < state.n_out; ++i)
    for (Index j = 0; j < state.n_out; ++j) {
      state.coefficients.push_back(
          model.system.family.projectors[static_cast<std::size_t>(i)] *
          model.system.initial_state *
          model.system.family.projectors[static_cast<std::size_t>(j)]);
      state.diag_blocks.push_back(r0_diag);
    }
  return state;
}

BlockPropagator::BlockPropagator(const MeasurementModel& model)
    : model_(&model), t_off_(model.schedule.t_off) {
  if (model.apparatus.diagonal) return;
  for (Index i = 0; i < model.apparatus.n_sources(); ++i)
    coupled_eigs_.push_back(hermitian_eigen(
        CMatrix(model.apparatus.hamiltonian +
                model.apparatus.sources[static_cast<std::size_t>(i)])));
  free_eig_ = hermitian_eigen(model.apparatus.hamiltonian);
}

void BlockPropagator::advance(BlockState& state, double dt, bool coupled) const {
  if (dt == 0.0) return;
  const Index n = state.n_out;
  if (state.diagonal) {
    if (!coupled) return;  // generators coincide, diagonal phases cancel
    const auto& sources = model_->apparatus.source_diags;
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) {
        if (i == j) continue;
        CVector& r = state.diag_blocks[static_cast<std::size_t>(i * n + j)];
        const RVector gap = sources[static_cast<std::size_t>(i)] -
                            sources[static_cast<std::size_t>(j)];
        for (Index z = 0; z < r.size(); ++z)
          r(z) *= std::exp(Complex(0.0, -gap(z) * dt));
      }
    return;
  }

  std::vector<CMatrix> us;
  if (coupled) {
    for (const HermitianEigen& eig : coupled_eigs_) us.push_back(propagator(eig, dt));
  } else {
    const CMatrix w = propagator(free_eig_, dt);
    for (Index i = 0; i < n; ++i) us.push_back(w);
  }
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) {
      CMatrix& r = state.blocks[static_cast<std::size_t>(i * n + j)];
      r = us[static_cast<std::size_t>(i)] * r * us[static_cast<std::size_t>(j)].adjoint();
    }
}

BlockState BlockPropagator::propagate(const BlockState& state, double t) const {
  if (t < state.time)
    throw std::invalid_argument("propagate: cannot evolve backwards in time");
  BlockState next = state;
  if (state.time < t_off_) {
    advance(next, std::min(t, t_off_) - state.time, true);
    next.time = std::min(t, t_off_);
  }
  if (t > t_off_) {
    advance(next, t - std::max(state.time, t_off_), false);
  }
  next.time = t;
  return next;
}

BlockState propagate(const BlockState& state, const MeasurementModel& model, double t) {
  return BlockPropagator(model).propagate(state, t);
}

CMatrix assemble_full(const BlockState& state) {
  const Index n = state.n_out;
  const Index d_s = state.coefficient(0, 0).rows();
  const Index d_a =
      state.diagonal ? state.diag_block(0, 0).size() : state.block(0, 0).rows();
  if (d_s * d_a > kMaxJointDim)
    throw std::invalid_argument("assemble_full: joint dimension exceeds dense limit");
  CMatrix full = CMatrix::Zero(d_s * d_a, d_s * d_a);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) {
      if (state.diagonal) {
        CMatrix r = CMatrix::Zero(d_a, d_a);
        r.diagonal() = state.diag_block(i, j);
        full += tensor(state.coefficient(i, j), r);
      } else {
        full += tensor(state.coefficient(i, j), state.block(i, j));
      }
    }
  return full;
}

CMatrix reduced_system_state(const BlockState& state) {
  const Index n = state.n_out;
  const Index d_s = state.coefficient(0, 0).rows();
  CMatrix r = CMatrix::Zero(d_s, d_s);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      r += state.coefficient(i, j) * state.block_trace(i, j);
  return r;
}

FullEvolutionOracle::FullEvolutionOracle(const MeasurementModel& model)
    : t_off_(model.schedule.t_off) {
  if (model.joint_dim() > kMaxJointDim)
    throw std::invalid_argument("oracle: joint dimension exceeds dense limit");
  const CMatrix r0 = model.system.initial_state;
  const CMatrix R0 = model.apparatus.dense_initial_state();
  initial_ = tensor(r0, R0);
  MeasurementModel dense_model = model;
  if (model.apparatus.diagonal) {
    dense_model.apparatus = densify(model.apparatus);
    std::vector<CMatrix> sources;
    for (Index i = 0; i < dense_model.apparatus.n_sources(); ++i)
      sources.push_back(dense_model.apparatus.sources[static_cast<std::size_t>(i)]);
    dense_model.coupling = build_coupling(dense_model.system.family, sources);
  }
  coupled_ = hermitian_eigen(full_hamiltonian(dense_model, true));
  free_ = hermitian_eigen(full_hamiltonian(dense_model, false));
}

CMatrix FullEvolutionOracle::state_at(double t) const {
  if (t < 0.0) throw std::invalid_argument("oracle: negative time");
  if (t <= t_off_) {
    const CMatrix u = propagator(coupled_, t);
    return u * initial_ * u.adjoint();
  }
  const CMatrix u = propagator(coupled_, t_off_);
  const CMatrix w = propagator(free_, t - t_off_);
  const CMatrix mid = u * initial_ * u.adjoint();
  return w * mid * w.adjoint();
}

CMatrix oracle_full_evolution(const MeasurementModel& model, double t) {
  return FullEvolutionOracle(model).state_at(t);
}

std::vector<CoherencePairRecord> coherence_metrics(const BlockState& state,
                                                   const MeasurementModel& model) {
  std::vector<CoherencePairRecord> records;
  const Index n = state.n_out;
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) {
      CoherencePairRecord rec;
      rec.i = i;
      rec.j = j;
      rec.trace_abs = std::abs(state.block_trace(i, j));
      if (state.diagonal) {
        Complex weighted = 0.0;
        const CVector& r = state.diag_block(i, j);
        for (Index z = 0; z < r.size(); ++z)
          weighted += model.apparatus.pointer_diag(z) * r(z);
        rec.pointer_trace_abs = std::abs(weighted);
      } else {
        Complex weighted = 0.0;
        const CMatrix& r = state.block(i, j);
        for (Index z = 0; z < r.rows(); ++z)
          weighted += model.apparatus.pointer_diag(z) * r(z, z);
        rec.pointer_trace_abs = std::abs(weighted);
      }
      Eigen::JacobiSVD<CMatrix> svd(state.coefficient(i, j));
      rec.system_coherence = svd.singularValues()(0) * rec.trace_abs;
      records.push_back(rec);
    }
  return records;
}

double dephasing_coherence_factor(const RVector& couplings, double sign_gap, double t) {
  double product = 1.0;
  for (Index m = 0; m < couplings.size(); ++m)
    product *= std::cos(sign_gap * couplings(m) * t);
  return product;
}

std::vector<RegistrationRecord> registration_metrics(const BlockState& state,
                                                     const MeasurementModel& model,
                                                     const GibbsianForm& targets) {
  std::vector<RegistrationRecord> records;
  const Index n = state.n_out;
  const ApparatusSpec& apparatus = model.apparatus;
  for (Index i = 0; i < n; ++i) {
    RegistrationRecord rec;
    rec.i = i;
    rec.weight = state.coefficient(i, i).trace().real();
    const Index sector = sector_for_outcome(apparatus, i);
    const ApparatusSector& s = apparatus.sectors[static_cast<std::size_t>(sector)];
    rec.pointer_value = s.pointer_value;

    if (state.diagonal) {
      // Diagonal blocks stay real on this path.
      const CVector& r = state.diag_block(i, i);
      RVector diag(r.size());
      for (Index z = 0; z < r.size(); ++z) diag(z) = r(z).real();
      double inside = 0.0;
      for (Index z = s.offset; z < s.offset + s.levels; ++z) inside += diag(z);
      rec.sector_weight = inside;
      rec.pointer_expectation = apparatus.pointer_diag.dot(diag);
      if (targets.defined[static_cast<std::size_t>(i)]) {
        const CMatrix& target = targets.apparatus_states[static_cast<std::size_t>(i)];
        double raw = 0.0;
        for (Index z = 0; z < diag.size(); ++z)
          raw += std::abs(diag(z) - target(z, z).real());
        rec.distance_raw = 0.5 * raw;
        if (inside > kStructuralTol) {
          double cond = 0.0;
          for (Index z = 0; z < diag.size(); ++z) {
            const bool in_sector = z >= s.offset && z < s.offset + s.levels;
            const double conditioned = in_sector ? diag(z) / inside : 0.0;
            cond += std::abs(conditioned - target(z, z).real());
          }
          rec.distance_conditioned = 0.5 * cond;
        }
      }
    } else {
      const CMatrix& r = state.block(i, i);
      rec.sector_weight = sector_weight(r, apparatus, sector);
      Complex pointer = 0.0;
      for (Index z = 0; z < r.rows(); ++z)
        pointer += apparatus.pointer_diag(z) * r(z, z);
      rec.pointer_expectation = pointer.real();
      if (targets.defined[static_cast<std::size_t>(i)]) {
        const CMatrix& target = targets.apparatus_states[static_cast<std::size_t>(i)];
        rec.distance_raw = trace_distance(r, target);
        if (rec.sector_weight > kStructuralTol) {
          CMatrix conditioned = CMatrix::Zero(r.rows(), r.cols());
          conditioned.block(s.offset, s.offset, s.levels, s.levels) =
              r.block(s.offset, s.offset, s.levels, s.levels) / rec.sector_weight;
          rec.distance_conditioned = trace_distance(conditioned, target);
        }
      }
    }
    records.push_back(rec);
  }
  return records;
}

FinalStateReport final_state_check(const BlockState& state,
                                   const MeasurementModel& model) {
  FinalStateReport report;
  const Index n = state.n_out;
  const ProjectorFamily& family = model.system.family;
  const RVector born = born_probabilities(model.system.initial_state, family);

  for (Index i = 0; i < n; ++i) {
    const double weight =
        (state.coefficient(i, i).trace() * state.block_trace(i, i)).real();
    report.max_weight_deviation =
        std::max(report.max_weight_deviation, std::abs(weight - born(i)));
    for (Index j = i + 1; j < n; ++j)
      report.max_coherence =
          std::max(report.max_coherence, std::abs(state.block_trace(i, j)));
  }

  if (!state.diagonal) {
    const GibbsianForm target_form =
        equilibrium_form(model, EquilibriumFlavor::kMicrocanonical);
    report.residual = trace_distance(assemble_full(state), assemble_form(target_form));
    return report;
  }

  // The diagonal path never materializes the joint operator.  With every
  // R_ij diagonal the joint state is block-diagonal over apparatus levels z,
  // with a d_S x d_S block M_z = sum_ij C_ij (R_ij)_z; the target
  // sum_i Pi_i r0 Pi_i (x) R_i^mu contributes T_z the same way, so the trace
  // distance is a sum of small Hermitian eigenproblems and the dense target
  // operators are never formed.
  const Index d_s = model.system.dim;
  const Index d_a = model.apparatus.dim;
  std::vector<CMatrix> weighted_blocks;
  for (Index i = 0; i < n; ++i) {
    const CMatrix& pi = family.projectors[static_cast<std::size_t>(i)];
    weighted_blocks.push_back(pi * model.system.initial_state * pi);
  }
  double total = 0.0;
  for (Index z = 0; z < d_a; ++z) {
    CMatrix m = CMatrix::Zero(d_s, d_s);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j)
        m += state.coefficient(i, j) * state.diag_block(i, j)(z);
    for (Index i = 0; i < n; ++i) {
      const Index sector = std::min<Index>(i, model.apparatus.n_sectors() - 1);
      const ApparatusSector& s =
          model.apparatus.sectors[static_cast<std::size_t>(sector)];
      if (z >= s.offset && z < s.offset + s.levels)
        m -= weighted_blocks[static_cast<std::size_t>(i)] /
             static_cast<double>(s.levels);
    }
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(CMatrix(0.5 * (m + m.adjoint())),
                                                  Eigen::EigenvaluesOnly);
    total += solver.eigenvalues().cwiseAbs().sum();
  }
  report.residual = 0.5 * total;
  return report;
}

ConservationReport conservation_check(const BlockState& state,
                                      const MeasurementModel& model,
                                      const RMatrix& f_values) {
  ConservationReport report;
  const Index n = state.n_out;
  const RVector born = born_probabilities(model.system.initial_state,
                                          model.system.family);

  RVector weights(n);
  for (Index i = 0; i < n; ++i) {
    const Complex tr = state.block_trace(i, i);
    report.max_trace_drift =
        std::max(report.max_trace_drift, std::abs(tr - Complex(1.0, 0.0)));
    weights(i) = (state.coefficient(i, i).trace() * tr).real();
    report.max_weight_drift =
        std::max(report.max_weight_drift, std::abs(weights(i) - born(i)));
  }

  for (Index f = 0; f < f_values.rows(); ++f) {
    double drift = 0.0;
    for (Index i = 0; i < n; ++i) drift += f_values(f, i) * (weights(i) - born(i));
    report.max_observable_drift = std::max(report.max_observable_drift, std::abs(drift));
  }

  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) {
      if (state.diagonal) {
        const CVector& a = state.diag_block(i, j);
        const CVector& b = state.diag_block(j, i);
        report.max_hermiticity_defect = std::max(
            report.max_hermiticity_defect, (a - b.conjugate()).cwiseAbs().maxCoeff());
      } else {
        report.max_hermiticity_defect =
            std::max(report.max_hermiticity_defect,
                     max_abs_diff(state.block(i, j), state.block(j, i).adjoint()));
      }
    }
  return report;
}

DynamicsTrace trace_dynamics(const MeasurementModel& model, const GibbsianForm& targets,
                             const std::vector<double>& times) {
  DynamicsTrace trace;
  const BlockPropagator propagator(model);
  const BlockState initial = init_blocks(model);
  for (double t : times) {
    const BlockState state = propagator.propagate(initial, t);
    trace.times.push_back(t);
    trace.coherence.push_back(coherence_metrics(state, model));
    trace.registration.push_back(registration_metrics(state, model, targets));
  }
  return trace;
}

}  // namespace qmsim
