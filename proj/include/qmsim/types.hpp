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

#ifndef QMSIM_TYPES_HPP_
#define QMSIM_TYPES_HPP_

#include <complex>

#include <Eigen/Dense>

namespace qmsim {

using Complex = std::complex<double>;
using Index = Eigen::Index;

template <typename Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using DenseVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using CMatrix = DenseMatrix<Complex>;
using CVector = DenseVector<Complex>;
using RMatrix = DenseMatrix<double>;
using RVector = DenseVector<double>;

// Tolerance tiers used throughout the library.
//
// kStructuralTol guards identities that hold exactly in the arithmetic
// (traces, unitarity, block sums).  kDerivedTol guards quantities that pass
// through an eigensolver.  kPsdFloor is the admissible negative excursion of
// state eigenvalues.  kDegeneracyTol is the spectral gap below which two
// levels are treated as one group when forming infinite-time averages.
inline constexpr double kStructuralTol = 1e-12;
inline constexpr double kDerivedTol = 1e-10;
inline constexpr double kPsdFloor = -1e-10;
inline constexpr double kDegeneracyTol = 1e-9;

// Dimension guard for dense joint-space operations.
inline constexpr Index kMaxJointDim = 4096;

}  // namespace qmsim

#endif  // QMSIM_TYPES_HPP_
