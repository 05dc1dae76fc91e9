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

#ifndef QMSIM_OPERATOR_ALGEBRA_HPP_
#define QMSIM_OPERATOR_ALGEBRA_HPP_

#include <type_traits>
#include <vector>

#include "qmsim/types.hpp"

namespace qmsim {

// Kronecker product a (x) b.  Works for any scalar combination Eigen can
// multiply; the result scalar is the product type.
template <typename DerivedA, typename DerivedB>
auto tensor(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = decltype(typename DerivedA::Scalar{} * typename DerivedB::Scalar{});
  DenseMatrix<Scalar> out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

enum class Subsystem { kFirst, kSecond };

// Partial trace of an operator on a bipartite space of shape
// (dim_first, dim_second), keeping the requested factor.
CMatrix partial_trace(const CMatrix& joint, Index dim_first, Index dim_second,
                      Subsystem keep);

CMatrix commutator(const CMatrix& a, const CMatrix& b);

double max_abs(const CMatrix& m);
double max_abs_diff(const CMatrix& a, const CMatrix& b);

// Eigendecomposition of a Hermitian operator, cached so propagators and
// operator functions at many parameter values reuse a single solve.
struct HermitianEigen {
  RVector values;
  CMatrix vectors;
};

// Throws std::invalid_argument if h deviates from Hermiticity by more than
// tol in any entry.
HermitianEigen hermitian_eigen(const CMatrix& h, double tol = kStructuralTol);

// exp(-i h t) from a cached eigendecomposition.
CMatrix propagator(const HermitianEigen& eig, double t);

// V f(diag) V^dagger for a scalar function of the spectrum.
template <typename F>
CMatrix apply_to_spectrum(const HermitianEigen& eig, F f) {
  CVector w(eig.values.size());
  for (Index i = 0; i < eig.values.size(); ++i) w(i) = Complex(f(eig.values(i)));
  return eig.vectors * w.asDiagonal() * eig.vectors.adjoint();
}

// Heisenberg-picture-free conjugation: exp(-iHt) op exp(+iHt).
CMatrix evolve(const CMatrix& op, const HermitianEigen& eig, double t);
CMatrix evolve_unitary(const CMatrix& op, const CMatrix& h, double t);

// -tr(rho ln rho).  Eigenvalues below kPsdFloor raise; small negatives are
// clipped to zero.
double von_neumann_entropy(const CMatrix& rho);

// Half the sum of singular values of a - b.  Uses the Hermitian fast path
// when the difference is Hermitian to working precision.
double trace_distance(const CMatrix& a, const CMatrix& b);

struct DensityCheck {
  double hermiticity_defect = 0.0;
  double trace_defect = 0.0;
  double min_eigenvalue = 0.0;
  bool ok = false;
};

DensityCheck check_density(const CMatrix& rho, double tol = kDerivedTol);

CVector basis_state(Index dim, Index k);
CMatrix pure_density(const CVector& psi);

double real_expectation(const CMatrix& observable, const CMatrix& state);

}  // namespace qmsim

#endif  // QMSIM_OPERATOR_ALGEBRA_HPP_
