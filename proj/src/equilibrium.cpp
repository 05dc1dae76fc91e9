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

#include "qmsim/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace qmsim {

namespace {

CMatrix gibbs_from_eigen(const HermitianEigen& eig, double beta) {
  const double ground = eig.values.minCoeff();
  RVector weights(eig.values.size());
  for (Index a = 0; a < eig.values.size(); ++a)
    weights(a) = std::exp(-beta * (eig.values(a) - ground));
  weights /= weights.sum();
  return eig.vectors * weights.cast<Complex>().asDiagonal() * eig.vectors.adjoint();
}

CMatrix state_from_probabilities(const CMatrix& vectors, const RVector& probabilities) {
  return vectors * probabilities.cast<Complex>().asDiagonal() * vectors.adjoint();
}

struct DualPoint {
  double value = 0.0;
  RVector probabilities;   // spectrum of the trial state
  RVector spectrum;        // eigenvalues of sum theta_k C_k
  CMatrix vectors;
};

DualPoint evaluate_dual(const MaxEntProblem& problem, const RVector& theta) {
  const Index d = problem.constraints.front().rows();
  CMatrix k = CMatrix::Zero(d, d);
  for (Index c = 0; c < static_cast<Index>(problem.constraints.size()); ++c)
    k += theta(c) * problem.constraints[static_cast<std::size_t>(c)];
  const HermitianEigen eig = hermitian_eigen(k, 1e-10);

  DualPoint point;
  point.spectrum = eig.values;
  point.vectors = eig.vectors;
  const double ground = eig.values.minCoeff();
  RVector w(d);
  for (Index a = 0; a < d; ++a) w(a) = std::exp(-(eig.values(a) - ground));
  const double z = w.sum();
  point.probabilities = w / z;
  point.value = std::log(z) - ground + theta.dot(problem.targets);
  return point;
}

}  // namespace

CMatrix canonical_sector_state(const CMatrix& h_a, const CMatrix& h_i, double beta) {
  if (beta < 0.0) throw std::invalid_argument("canonical_sector_state: beta < 0");
  return gibbs_from_eigen(hermitian_eigen(CMatrix(h_a + h_i)), beta);
}

RVector canonical_sector_diag(const RVector& h_a_diag, const RVector& h_i_diag,
                              double beta) {
  if (beta < 0.0) throw std::invalid_argument("canonical_sector_diag: beta < 0");
  const RVector energies = h_a_diag + h_i_diag;
  const double ground = energies.minCoeff();
  RVector weights(energies.size());
  for (Index z = 0; z < energies.size(); ++z)
    weights(z) = std::exp(-beta * (energies(z) - ground));
  return weights / weights.sum();
}

CMatrix microcanonical_state(const ApparatusSpec& apparatus, Index sector) {
  if (sector < 0 || sector >= apparatus.n_sectors())
    throw std::invalid_argument("microcanonical_state: invalid sector");
  const ApparatusSector& s = apparatus.sectors[static_cast<std::size_t>(sector)];
  CMatrix r = CMatrix::Zero(apparatus.dim, apparatus.dim);
  const double w = 1.0 / static_cast<double>(s.levels);
  for (Index z = s.offset; z < s.offset + s.levels; ++z) r(z, z) = w;
  return r;
}

double sector_weight(const CMatrix& apparatus_state, const ApparatusSpec& apparatus,
                     Index sector) {
  const ApparatusSector& s = apparatus.sectors[static_cast<std::size_t>(sector)];
  double w = 0.0;
  for (Index z = s.offset; z < s.offset + s.levels; ++z)
    w += apparatus_state(z, z).real();
  return w;
}

double canonical_sector_leakage(const MeasurementModel& model, Index sector) {
  const ApparatusSpec& apparatus = model.apparatus;
  if (apparatus.diagonal) {
    const RVector diag = canonical_sector_diag(
        apparatus.hamiltonian_diag,
        apparatus.source_diags[static_cast<std::size_t>(sector)], model.beta);
    const ApparatusSector& s =
        apparatus.sectors[static_cast<std::size_t>(std::min<Index>(
            sector, apparatus.n_sectors() - 1))];
    double inside = 0.0;
    for (Index z = s.offset; z < s.offset + s.levels; ++z) inside += diag(z);
    return 1.0 - inside;
  }
  const CMatrix r = canonical_sector_state(
      apparatus.hamiltonian, apparatus.sources[static_cast<std::size_t>(sector)],
      model.beta);
  return 1.0 - sector_weight(r, apparatus, sector);
}

GibbsianForm equilibrium_form(const MeasurementModel& model, EquilibriumFlavor flavor) {
  const ProjectorFamily& family = model.system.family;
  const Index n = family.n_out();
  GibbsianForm form;
  form.flavor = flavor;
  form.weights = RVector::Zero(n);
  form.system_states.resize(static_cast<std::size_t>(n));
  form.apparatus_states.resize(static_cast<std::size_t>(n));
  form.defined.assign(static_cast<std::size_t>(n), false);

  for (Index i = 0; i < n; ++i) {
    const CMatrix& pi = family.projectors[static_cast<std::size_t>(i)];
    const CMatrix block = pi * model.system.initial_state * pi;
    const double p = block.trace().real();
    form.weights(i) = p;
    if (p <= kStructuralTol) continue;
    form.defined[static_cast<std::size_t>(i)] = true;
    form.system_states[static_cast<std::size_t>(i)] = block / p;

    if (flavor == EquilibriumFlavor::kCanonical) {
      if (model.apparatus.diagonal) {
        const RVector diag = canonical_sector_diag(
            model.apparatus.hamiltonian_diag,
            model.apparatus.source_diags[static_cast<std::size_t>(i)], model.beta);
        CMatrix r = CMatrix::Zero(model.apparatus.dim, model.apparatus.dim);
        for (Index z = 0; z < model.apparatus.dim; ++z) r(z, z) = diag(z);
        form.apparatus_states[static_cast<std::size_t>(i)] = r;
      } else {
        form.apparatus_states[static_cast<std::size_t>(i)] = canonical_sector_state(
            model.apparatus.hamiltonian,
            model.apparatus.sources[static_cast<std::size_t>(i)], model.beta);
      }
    } else {
      // The dephasing apparatus has one physical sector shared by all
      // outcomes; sectored apparatuses pair outcome i with sector i.
      const Index sector = std::min<Index>(i, model.apparatus.n_sectors() - 1);
      form.apparatus_states[static_cast<std::size_t>(i)] =
          microcanonical_state(model.apparatus, sector);
    }
  }
  return form;
}

CMatrix assemble_form(const GibbsianForm& form) {
  CMatrix out;
  for (std::size_t i = 0; i < form.defined.size(); ++i) {
    if (!form.defined[i]) continue;
    const CMatrix term =
        form.weights(static_cast<Index>(i)) *
        tensor(form.system_states[i], form.apparatus_states[i]);
    out = (out.size() == 0) ? term : CMatrix(out + term);
  }
  if (out.size() == 0)
    throw std::invalid_argument("assemble_form: no defined blocks");
  return out;
}

FormCheck check_form(const GibbsianForm& form, const ProjectorFamily& family) {
  FormCheck check;
  check.weight_sum_defect = std::abs(form.weights.sum() - 1.0);
  check.min_weight = form.weights.minCoeff();
  for (std::size_t i = 0; i < form.defined.size(); ++i) {
    if (!form.defined[i]) continue;
    const CMatrix& pi = family.projectors[i];
    check.block_support_defect =
        std::max(check.block_support_defect,
                 max_abs_diff(form.system_states[i], pi * form.system_states[i] * pi));
  }
  check.ok = check.weight_sum_defect <= kStructuralTol && check.min_weight >= -kStructuralTol &&
             check.block_support_defect <= kStructuralTol;
  return check;
}

EquilibriumFit identify_equilibrium(const CMatrix& joint, const MeasurementModel& model,
                                    EquilibriumFlavor flavor) {
  const ProjectorFamily& family = model.system.family;
  const Index n = family.n_out();
  const Index d_s = model.system.dim;
  const Index d_a = model.apparatus.dim;
  if (joint.rows() != d_s * d_a)
    throw std::invalid_argument("identify_equilibrium: dimension mismatch");

  const CMatrix id_a = CMatrix::Identity(d_a, d_a);
  std::vector<CMatrix> side;
  for (Index i = 0; i < n; ++i)
    side.push_back(tensor(family.projectors[static_cast<std::size_t>(i)], id_a));

  EquilibriumFit fit;
  fit.form.flavor = flavor;
  fit.form.weights = RVector::Zero(n);
  fit.form.system_states.resize(static_cast<std::size_t>(n));
  fit.form.apparatus_states.resize(static_cast<std::size_t>(n));
  fit.form.defined.assign(static_cast<std::size_t>(n), false);

  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      const CMatrix block = side[static_cast<std::size_t>(i)] * joint *
                            side[static_cast<std::size_t>(j)];
      if (i != j) {
        fit.offdiag_mass += block.norm();
        continue;
      }
      const double q = block.trace().real();
      fit.form.weights(i) = q;
      if (q <= kStructuralTol) continue;
      fit.form.defined[static_cast<std::size_t>(i)] = true;
      fit.form.system_states[static_cast<std::size_t>(i)] =
          partial_trace(block, d_s, d_a, Subsystem::kFirst) / q;
      fit.form.apparatus_states[static_cast<std::size_t>(i)] =
          partial_trace(block, d_s, d_a, Subsystem::kSecond) / q;
    }
  }
  fit.residual = trace_distance(joint, assemble_form(fit.form));
  return fit;
}

std::vector<CMatrix> conserved_observable_basis(const ProjectorFamily& family) {
  const Index d = family.dim();
  std::vector<CMatrix> basis;
  for (const CMatrix& pi : family.projectors) {
    // Hermitian basis of the compressed block Pi M Pi: diagonal units plus
    // symmetric/antisymmetric pairs, expressed through the block's
    // orthonormal range vectors.
    const HermitianEigen eig = hermitian_eigen(pi);
    std::vector<CVector> range;
    for (Index a = 0; a < d; ++a)
      if (eig.values(a) > 0.5) range.push_back(eig.vectors.col(a));
    const Index r = static_cast<Index>(range.size());
    for (Index a = 0; a < r; ++a) {
      basis.push_back(pure_density(range[static_cast<std::size_t>(a)]));
      for (Index b = a + 1; b < r; ++b) {
        const CVector& u = range[static_cast<std::size_t>(a)];
        const CVector& v = range[static_cast<std::size_t>(b)];
        basis.push_back(u * v.adjoint() + v * u.adjoint());
        basis.push_back(Complex(0.0, 1.0) * (u * v.adjoint() - v * u.adjoint()));
      }
    }
  }
  return basis;
}

double max_ent_dual(const MaxEntProblem& problem, const RVector& theta) {
  return evaluate_dual(problem, theta).value;
}

RVector max_ent_dual_gradient(const MaxEntProblem& problem, const RVector& theta) {
  const DualPoint point = evaluate_dual(problem, theta);
  const CMatrix state = state_from_probabilities(point.vectors, point.probabilities);
  RVector grad(problem.targets.size());
  for (Index k = 0; k < grad.size(); ++k)
    grad(k) = problem.targets(k) -
              (problem.constraints[static_cast<std::size_t>(k)] * state).trace().real();
  return grad;
}

MaxEntResult max_ent_solve(const MaxEntProblem& problem, double tol,
                           Index max_iterations) {
  const Index m = static_cast<Index>(problem.constraints.size());
  if (m == 0) throw std::invalid_argument("max_ent_solve: no constraints");
  if (problem.targets.size() != m)
    throw std::invalid_argument("max_ent_solve: one target per constraint required");

  // Targets must be strictly inside each observable's spectral range; a
  // boundary target corresponds to an infinite multiplier.
  for (Index k = 0; k < m; ++k) {
    const HermitianEigen eig =
        hermitian_eigen(problem.constraints[static_cast<std::size_t>(k)]);
    const double lo = eig.values.minCoeff();
    const double hi = eig.values.maxCoeff();
    const double target = problem.targets(k);
    if (target <= lo || target >= hi)
      throw InfeasibleTargets(
          "max_ent_solve: target " + std::to_string(target) + " for constraint " +
          std::to_string(k) + " outside open spectral range (" + std::to_string(lo) +
          ", " + std::to_string(hi) + ")");
  }

  RVector theta = RVector::Zero(m);
  DualPoint point = evaluate_dual(problem, theta);

  for (Index iter = 1; iter <= max_iterations; ++iter) {
    // Gradient of the dual: targets - <C_k>.
    const Index d = point.probabilities.size();
    std::vector<CMatrix> rotated;
    for (Index k = 0; k < m; ++k)
      rotated.push_back(point.vectors.adjoint() *
                        problem.constraints[static_cast<std::size_t>(k)] *
                        point.vectors);

    RVector expectations(m);
    for (Index k = 0; k < m; ++k) {
      double e = 0.0;
      for (Index a = 0; a < d; ++a)
        e += point.probabilities(a) * rotated[static_cast<std::size_t>(k)](a, a).real();
      expectations(k) = e;
    }
    const RVector grad = problem.targets - expectations;
    if (grad.cwiseAbs().maxCoeff() <= tol) {
      MaxEntResult result;
      result.state = state_from_probabilities(point.vectors, point.probabilities);
      result.multipliers = theta;
      result.iterations = iter - 1;
      result.constraint_residual = grad.cwiseAbs().maxCoeff();
      return result;
    }

    // Kubo-Mori covariance of the centered constraints: the exact Hessian
    // of the dual.  kappa(p_a, p_b) = (p_a - p_b) / (lambda_b - lambda_a)
    // with the limit p_a on coincident eigenvalues.
    RMatrix hessian = RMatrix::Zero(m, m);
    for (Index a = 0; a < d; ++a) {
      for (Index b = 0; b < d; ++b) {
        const double gap = point.spectrum(b) - point.spectrum(a);
        const double kappa =
            (std::abs(gap) <= 1e-12)
                ? 0.5 * (point.probabilities(a) + point.probabilities(b))
                : (point.probabilities(a) - point.probabilities(b)) / gap;
        if (kappa == 0.0) continue;
        for (Index k = 0; k < m; ++k) {
          Complex xk = rotated[static_cast<std::size_t>(k)](a, b);
          if (a == b) xk -= expectations(k);
          for (Index l = k; l < m; ++l) {
            Complex xl = rotated[static_cast<std::size_t>(l)](a, b);
            if (a == b) xl -= expectations(l);
            hessian(k, l) += kappa * (xk * std::conj(xl)).real();
          }
        }
      }
    }
    for (Index k = 0; k < m; ++k)
      for (Index l = 0; l < k; ++l) hessian(k, l) = hessian(l, k);

    const double ridge = 1e-14 * std::max(1.0, hessian.trace());
    hessian += ridge * RMatrix::Identity(m, m);
    const RVector step = hessian.ldlt().solve(-grad);

    // Backtracking on the dual value (Armijo).
    const double slope = grad.dot(step);
    double alpha = 1.0;
    DualPoint next = evaluate_dual(problem, theta + alpha * step);
    while (next.value > point.value + 1e-4 * alpha * slope && alpha > 1e-10) {
      alpha *= 0.5;
      next = evaluate_dual(problem, theta + alpha * step);
    }
    theta += alpha * step;
    point = next;
  }

  throw std::runtime_error(
      "max_ent_solve: no convergence within iteration budget; last residual " +
      std::to_string(max_ent_dual_gradient(problem, theta).cwiseAbs().maxCoeff()));
}

}  // namespace qmsim
