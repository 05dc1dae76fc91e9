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

#include "qmsim/subensembles.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace qmsim {

namespace {

constexpr double kSupportCutoff = 1e-12;

Index default_sector(const MeasurementModel& model, Index outcome) {
  return std::min<Index>(outcome, model.apparatus.n_sectors() - 1);
}

Index mapped_sector(const MeasurementModel& model, Index outcome,
                    const std::vector<Index>* sector_map) {
  if (sector_map == nullptr) return default_sector(model, outcome);
  if (sector_map->size() != static_cast<std::size_t>(model.system.family.n_out()))
    throw std::invalid_argument("correlated_vector: sector map size mismatch");
  const Index s = (*sector_map)[static_cast<std::size_t>(outcome)];
  if (s < 0 || s >= model.apparatus.n_sectors())
    throw std::invalid_argument("correlated_vector: sector map out of range");
  return s;
}

}  // namespace

CorrelatedSubspace correlated_subspace(const MeasurementModel& model) {
  const ProjectorFamily& family = model.system.family;
  CorrelatedSubspace sub;
  sub.system_vectors.reserve(static_cast<std::size_t>(family.n_out()));
  for (Index i = 0; i < family.n_out(); ++i) {
    const CMatrix& pi = family.projectors[static_cast<std::size_t>(i)];
    if (std::abs(pi.trace().real() - 1.0) > kStructuralTol)
      throw std::invalid_argument(
          "correlated_subspace: outcome projector is not rank one");
    Index best_col = 0;
    pi.colwise().norm().maxCoeff(&best_col);
    CVector s = pi.col(best_col);
    s.normalize();
    Index best_row = 0;
    s.cwiseAbs().maxCoeff(&best_row);
    const Complex phase = s(best_row) / std::abs(s(best_row));
    s /= phase;
    sub.system_vectors.push_back(std::move(s));
  }
  sub.sector_levels = model.apparatus.sectors[0].levels;
  for (Index i = 0; i < family.n_out(); ++i) {
    const Index s = default_sector(model, i);
    if (model.apparatus.sectors[static_cast<std::size_t>(s)].levels !=
        sub.sector_levels)
      throw std::invalid_argument("correlated_subspace: unequal sector sizes");
  }
  return sub;
}

RVector weights_from_amplitudes(const CMatrix& amplitudes) {
  return amplitudes.rowwise().squaredNorm();
}

CMatrix random_amplitudes(Index n_out, Index levels, Substream& rng) {
  CMatrix u(n_out, levels);
  for (Index i = 0; i < n_out; ++i)
    for (Index e = 0; e < levels; ++e) u(i, e) = rng.next_complex_gaussian();
  u /= u.norm();
  return u;
}

SubensembleSpec random_correlated_pure(const MeasurementModel& model,
                                       std::uint64_t master_seed) {
  const CorrelatedSubspace sub = correlated_subspace(model);
  Substream rng(master_seed, "subensemble/amplitudes");
  SubensembleSpec spec;
  spec.amplitudes =
      random_amplitudes(model.system.family.n_out(), sub.sector_levels, rng);
  spec.t_split = model.schedule.t_split;
  return spec;
}

CVector correlated_vector(const CorrelatedSubspace& sub, const MeasurementModel& model,
                          const CMatrix& amplitudes,
                          const std::vector<Index>* sector_map) {
  const Index d_s = model.system.dim;
  const Index d_a = model.apparatus.dim;
  if (amplitudes.rows() != model.system.family.n_out() ||
      amplitudes.cols() != sub.sector_levels)
    throw std::invalid_argument("correlated_vector: amplitude shape mismatch");
  CVector v = CVector::Zero(d_s * d_a);
  for (Index i = 0; i < amplitudes.rows(); ++i) {
    const Index s = mapped_sector(model, i, sector_map);
    const ApparatusSector& sector =
        model.apparatus.sectors[static_cast<std::size_t>(s)];
    if (sector.levels != amplitudes.cols())
      throw std::invalid_argument("correlated_vector: sector size mismatch");
    const CVector& sys = sub.system_vectors[static_cast<std::size_t>(i)];
    for (Index a = 0; a < d_s; ++a)
      for (Index e = 0; e < sector.levels; ++e)
        v(a * d_a + sector.offset + e) += sys(a) * amplitudes(i, e);
  }
  return v;
}

CMatrix correlated_density(const CorrelatedSubspace& sub, const MeasurementModel& model,
                           const CMatrix& amplitudes,
                           const std::vector<Index>* sector_map) {
  const CVector v = correlated_vector(sub, model, amplitudes, sector_map);
  return v * v.adjoint();
}

CMatrix evolve_amplitudes(const MeasurementModel& model, const CMatrix& amplitudes,
                          double t_from, double t_to) {
  if (t_from < 0.0 || t_to < t_from)
    throw std::invalid_argument("evolve_amplitudes: bad time interval");
  const double t_off = model.schedule.t_off;
  const double coupled_dt =
      std::max(0.0, std::min(t_to, t_off) - std::min(t_from, t_off));
  const double free_dt = std::max(0.0, t_to - std::max(t_from, t_off));
  CMatrix out = amplitudes;
  for (Index i = 0; i < amplitudes.rows(); ++i) {
    const Index s = default_sector(model, i);
    const ApparatusSector& sector =
        model.apparatus.sectors[static_cast<std::size_t>(s)];
    const Index o = sector.offset;
    const Index l = sector.levels;
    if (l != amplitudes.cols())
      throw std::invalid_argument("evolve_amplitudes: sector size mismatch");
    if (model.apparatus.diagonal) {
      for (Index e = 0; e < l; ++e) {
        const double g_free = model.apparatus.hamiltonian_diag(o + e);
        const double g_coupled =
            g_free + model.apparatus.source_diags[static_cast<std::size_t>(i)](o + e);
        out(i, e) *= std::polar(1.0, -g_coupled * coupled_dt - g_free * free_dt);
      }
    } else {
      const CMatrix h_free = model.apparatus.hamiltonian.block(o, o, l, l);
      CVector row = out.row(i).transpose();
      if (coupled_dt > 0.0) {
        const CMatrix h_coupled =
            h_free +
            model.apparatus.sources[static_cast<std::size_t>(i)].block(o, o, l, l);
        row = propagator(hermitian_eigen(h_coupled), coupled_dt) * row;
      }
      if (free_dt > 0.0)
        row = propagator(hermitian_eigen(h_free), free_dt) * row;
      out.row(i) = row.transpose();
    }
  }
  return out;
}

SubensembleRecord subensemble_record(const CMatrix& amplitudes) {
  SubensembleRecord rec;
  rec.weights = weights_from_amplitudes(amplitudes);
  rec.site_populations = amplitudes.cwiseAbs2();
  for (Index i = 0; i < rec.weights.size(); ++i)
    for (Index j = i + 1; j < rec.weights.size(); ++j)
      rec.max_cross_coherence = std::max(
          rec.max_cross_coherence, std::sqrt(rec.weights(i) * rec.weights(j)));
  return rec;
}

CMatrix diagonal_ensemble(const CMatrix& state, const HermitianEigen& eig,
                          double grouping_tol) {
  const Index d = eig.values.size();
  CMatrix sigma = eig.vectors.adjoint() * state * eig.vectors;
  std::vector<Index> group(static_cast<std::size_t>(d), 0);
  for (Index a = 1; a < d; ++a) {
    group[static_cast<std::size_t>(a)] = group[static_cast<std::size_t>(a - 1)];
    if (eig.values(a) - eig.values(a - 1) > grouping_tol)
      ++group[static_cast<std::size_t>(a)];
  }
  for (Index a = 0; a < d; ++a)
    for (Index b = 0; b < d; ++b)
      if (group[static_cast<std::size_t>(a)] != group[static_cast<std::size_t>(b)])
        sigma(a, b) = Complex(0.0, 0.0);
  return eig.vectors * sigma * eig.vectors.adjoint();
}

CMatrix window_averaged_state(const CMatrix& state, const HermitianEigen& eig,
                              double t_lo, double t_hi, Index samples) {
  if (samples < 1 || t_hi < t_lo)
    throw std::invalid_argument("window_averaged_state: bad window");
  const Index d = eig.values.size();
  CMatrix sigma = eig.vectors.adjoint() * state * eig.vectors;
  const double h = samples > 1 ? (t_hi - t_lo) / static_cast<double>(samples - 1) : 0.0;
  for (Index a = 0; a < d; ++a) {
    for (Index b = 0; b < d; ++b) {
      const double delta = eig.values(a) - eig.values(b);
      Complex factor;
      if (samples == 1 || std::abs(delta * h) < 1e-12) {
        factor = std::polar(1.0, -delta * 0.5 * (t_lo + t_hi));
      } else {
        const Complex z = std::polar(1.0, -delta * h);
        const Complex num = 1.0 - std::pow(z, static_cast<double>(samples));
        factor = std::polar(1.0, -delta * t_lo) * num /
                 (static_cast<double>(samples) * (1.0 - z));
      }
      sigma(a, b) *= factor;
    }
  }
  return eig.vectors * sigma * eig.vectors.adjoint();
}

CMatrix uniform_sector_target(const CorrelatedSubspace& sub,
                              const MeasurementModel& model, const RVector& weights) {
  const Index d_a = model.apparatus.dim;
  CMatrix target = CMatrix::Zero(model.system.dim * d_a, model.system.dim * d_a);
  for (Index i = 0; i < weights.size(); ++i) {
    const Index s = default_sector(model, i);
    const ApparatusSector& sector =
        model.apparatus.sectors[static_cast<std::size_t>(s)];
    CMatrix app = CMatrix::Zero(d_a, d_a);
    app.block(sector.offset, sector.offset, sector.levels, sector.levels) =
        CMatrix::Identity(sector.levels, sector.levels) /
        static_cast<double>(sector.levels);
    const CVector& sys = sub.system_vectors[static_cast<std::size_t>(i)];
    target += weights(i) * tensor(CMatrix(sys * sys.adjoint()), app);
  }
  return target;
}

RMatrix sector_site_populations(const CMatrix& state, const CorrelatedSubspace& sub,
                                const MeasurementModel& model) {
  const Index d_s = model.system.dim;
  const Index d_a = model.apparatus.dim;
  const Index n_out = static_cast<Index>(sub.system_vectors.size());
  RMatrix pops(n_out, sub.sector_levels);
  for (Index i = 0; i < n_out; ++i) {
    const Index s = default_sector(model, i);
    const ApparatusSector& sector =
        model.apparatus.sectors[static_cast<std::size_t>(s)];
    const CVector& sys = sub.system_vectors[static_cast<std::size_t>(i)];
    for (Index e = 0; e < sector.levels; ++e) {
      const Index idx = sector.offset + e;
      Complex val(0.0, 0.0);
      for (Index a = 0; a < d_s; ++a)
        for (Index b = 0; b < d_s; ++b)
          val += std::conj(sys(a)) * state(a * d_a + idx, b * d_a + idx) * sys(b);
      pops(i, e) = val.real();
    }
  }
  return pops;
}

namespace {

AdmissibleDecomposition decompose_with_mixer(const HermitianEigen& eig, Index rank,
                                             const CMatrix& mixer) {
  const Index d = eig.values.size();
  AdmissibleDecomposition dec;
  dec.weights = RVector::Zero(mixer.rows());
  dec.components.reserve(static_cast<std::size_t>(mixer.rows()));
  for (Index r = 0; r < mixer.rows(); ++r) {
    CVector psi = CVector::Zero(d);
    for (Index a = 0; a < rank; ++a) {
      const Index col = d - rank + a;
      psi += mixer(r, a) * std::sqrt(std::max(0.0, eig.values(col))) *
             eig.vectors.col(col);
    }
    const double k = psi.squaredNorm();
    if (k < kSupportCutoff)
      throw std::runtime_error(
          "sample_admissible_decomposition: vanishing component weight");
    dec.weights(r) = k;
    dec.components.push_back(CMatrix(psi * psi.adjoint()) / k);
  }
  return dec;
}

Index support_rank(const HermitianEigen& eig) {
  Index rank = 0;
  for (Index a = 0; a < eig.values.size(); ++a)
    if (eig.values(a) > kSupportCutoff) ++rank;
  return rank;
}

}  // namespace

AdmissibleDecomposition sample_admissible_decomposition(const CMatrix& state,
                                                        Index parts,
                                                        std::uint64_t master_seed) {
  const HermitianEigen eig = hermitian_eigen(state);
  const Index rank = support_rank(eig);
  if (rank == 0)
    throw std::invalid_argument("sample_admissible_decomposition: zero state");
  if (parts < rank)
    throw std::invalid_argument(
        "sample_admissible_decomposition: parts below state rank");
  Substream rng(master_seed, "decomposition/isometry");
  const CMatrix mixer = haar_isometry(parts, rank, rng);
  return decompose_with_mixer(eig, rank, mixer);
}

AdmissibleDecomposition admissible_decomposition_from_mixer(const CMatrix& state,
                                                            const CMatrix& mixer) {
  const HermitianEigen eig = hermitian_eigen(state);
  const Index rank = support_rank(eig);
  if (mixer.cols() != rank || mixer.rows() < rank)
    throw std::invalid_argument(
        "admissible_decomposition_from_mixer: mixer shape mismatch");
  if (max_abs(CMatrix(mixer.adjoint() * mixer - CMatrix::Identity(rank, rank))) >
      kDerivedTol)
    throw std::invalid_argument(
        "admissible_decomposition_from_mixer: columns not orthonormal");
  return decompose_with_mixer(eig, rank, mixer);
}

SplitCheck check_admissible_decomposition(const CMatrix& state,
                                          const AdmissibleDecomposition& dec) {
  SplitCheck check;
  CMatrix recon = CMatrix::Zero(state.rows(), state.cols());
  check.min_component_eigenvalue = std::numeric_limits<double>::infinity();

  const HermitianEigen eig = hermitian_eigen(state);
  const Index rank = support_rank(eig);
  const Index d = eig.values.size();
  const CMatrix support = eig.vectors.rightCols(rank);
  const CMatrix outside =
      CMatrix::Identity(d, d) - CMatrix(support * support.adjoint());

  for (Index r = 0; r < dec.weights.size(); ++r) {
    const CMatrix& comp = dec.components[static_cast<std::size_t>(r)];
    recon += dec.weights(r) * comp;
    Eigen::SelfAdjointEigenSolver<CMatrix> es(comp, Eigen::EigenvaluesOnly);
    check.min_component_eigenvalue =
        std::min(check.min_component_eigenvalue, es.eigenvalues().minCoeff());
    check.support_leakage =
        std::max(check.support_leakage, (outside * comp).trace().real());
  }
  check.reconstruction_defect = max_abs_diff(recon, state);
  check.weight_defect = std::abs(dec.weights.sum() - 1.0);
  return check;
}

double max_admissible_weight(const CMatrix& state, const CMatrix& component) {
  const HermitianEigen eig = hermitian_eigen(state);
  const Index rank = support_rank(eig);
  if (rank == 0) return 0.0;
  const Index d = eig.values.size();
  const CMatrix support = eig.vectors.rightCols(rank);
  const CMatrix inside = support.adjoint() * component * support;
  const double outside_mass = component.trace().real() - inside.trace().real();
  if (outside_mass > kSupportCutoff) return 0.0;
  RVector scale(rank);
  for (Index a = 0; a < rank; ++a)
    scale(a) = 1.0 / std::sqrt(eig.values(d - rank + a));
  const CMatrix whitened =
      scale.cast<Complex>().asDiagonal() * inside * scale.cast<Complex>().asDiagonal();
  Eigen::SelfAdjointEigenSolver<CMatrix> es(whitened, Eigen::EigenvaluesOnly);
  const double top = es.eigenvalues().maxCoeff();
  if (top <= 0.0) return std::numeric_limits<double>::infinity();
  return 1.0 / top;
}

}  // namespace qmsim
