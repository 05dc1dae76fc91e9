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

#include "qmsim/operator_algebra.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace qmsim {

CMatrix partial_trace(const CMatrix& joint, Index dim_first, Index dim_second,
                      Subsystem keep) {
  if (joint.rows() != dim_first * dim_second || joint.cols() != joint.rows())
    throw std::invalid_argument("partial_trace: dimension mismatch");
  if (keep == Subsystem::kFirst) {
    CMatrix out = CMatrix::Zero(dim_first, dim_first);
    for (Index i = 0; i < dim_first; ++i)
      for (Index j = 0; j < dim_first; ++j)
        for (Index k = 0; k < dim_second; ++k)
          out(i, j) += joint(i * dim_second + k, j * dim_second + k);
    return out;
  }
  CMatrix out = CMatrix::Zero(dim_second, dim_second);
  for (Index k = 0; k < dim_first; ++k)
    for (Index i = 0; i < dim_second; ++i)
      for (Index j = 0; j < dim_second; ++j)
        out(i, j) += joint(k * dim_second + i, k * dim_second + j);
  return out;
}

CMatrix commutator(const CMatrix& a, const CMatrix& b) { return a * b - b * a; }

double max_abs(const CMatrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

double max_abs_diff(const CMatrix& a, const CMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("max_abs_diff: shape mismatch");
  return max_abs(a - b);
}

HermitianEigen hermitian_eigen(const CMatrix& h, double tol) {
  if (h.rows() != h.cols()) throw std::invalid_argument("hermitian_eigen: not square");
  const double defect = max_abs(h - h.adjoint());
  if (defect > tol)
    throw std::invalid_argument("hermitian_eigen: hermiticity defect " +
                                std::to_string(defect));
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(h);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("hermitian_eigen: eigensolver failed");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

CMatrix propagator(const HermitianEigen& eig, double t) {
  return apply_to_spectrum(eig, [t](double lambda) {
    return std::exp(Complex(0.0, -lambda * t));
  });
}

CMatrix evolve(const CMatrix& op, const HermitianEigen& eig, double t) {
  const CMatrix u = propagator(eig, t);
  return u * op * u.adjoint();
}

CMatrix evolve_unitary(const CMatrix& op, const CMatrix& h, double t) {
  return evolve(op, hermitian_eigen(h), t);
}

double von_neumann_entropy(const CMatrix& rho) {
  const HermitianEigen eig = hermitian_eigen(rho);
  double s = 0.0;
  for (Index i = 0; i < eig.values.size(); ++i) {
    const double p = eig.values(i);
    if (p < kPsdFloor)
      throw std::invalid_argument("von_neumann_entropy: eigenvalue " +
                                  std::to_string(p) + " below admissible floor");
    if (p > 0.0) s -= p * std::log(p);
  }
  return s;
}

double trace_distance(const CMatrix& a, const CMatrix& b) {
  const CMatrix diff = a - b;
  if (max_abs(diff - diff.adjoint()) <= kDerivedTol) {
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(diff, Eigen::EigenvaluesOnly);
    return 0.5 * solver.eigenvalues().cwiseAbs().sum();
  }
  Eigen::BDCSVD<CMatrix> svd(diff);
  return 0.5 * svd.singularValues().sum();
}

DensityCheck check_density(const CMatrix& rho, double tol) {
  DensityCheck out;
  out.hermiticity_defect = max_abs(rho - rho.adjoint());
  out.trace_defect = std::abs(rho.trace() - Complex(1.0, 0.0));
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(
      CMatrix(0.5 * (rho + rho.adjoint())), Eigen::EigenvaluesOnly);
  out.min_eigenvalue = solver.eigenvalues().minCoeff();
  out.ok = out.hermiticity_defect <= tol && out.trace_defect <= tol &&
           out.min_eigenvalue >= kPsdFloor;
  return out;
}

CVector basis_state(Index dim, Index k) {
  CVector v = CVector::Zero(dim);
  v(k) = Complex(1.0, 0.0);
  return v;
}

CMatrix pure_density(const CVector& psi) { return psi * psi.adjoint(); }

double real_expectation(const CMatrix& observable, const CMatrix& state) {
  return (observable * state).trace().real();
}

}  // namespace qmsim
