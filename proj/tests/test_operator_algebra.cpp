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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "qmsim/operator_algebra.hpp"
#include "qmsim/rng.hpp"

using namespace qmsim;

namespace {

CMatrix random_hermitian(Index n, std::uint64_t seed) {
  Substream rng(seed, "test/hermitian");
  return random_gue(n, 1.0, rng);
}

CMatrix random_density(Index n, std::uint64_t seed) {
  Substream rng(seed, "test/density");
  const CMatrix a = gaussian_complex_matrix(n, n, rng);
  const CMatrix d = a * a.adjoint();
  return d / d.trace();
}

const CMatrix kPauliX = (CMatrix(2, 2) << 0, 1, 1, 0).finished();
const CMatrix kPauliY =
    (CMatrix(2, 2) << 0, Complex(0, -1), Complex(0, 1), 0).finished();
const CMatrix kPauliZ = (CMatrix(2, 2) << 1, 0, 0, -1).finished();

}  // namespace

TEST_CASE("tensor is the kronecker product") {
  const CMatrix a = random_hermitian(2, 1);
  const CMatrix b = random_hermitian(3, 2);
  const CMatrix ab = tensor(a, b);
  REQUIRE(ab.rows() == 6);
  REQUIRE(ab.cols() == 6);
  for (Index i = 0; i < 6; ++i)
    for (Index j = 0; j < 6; ++j)
      CHECK(std::abs(ab(i, j) - a(i / 3, j / 3) * b(i % 3, j % 3)) == 0.0);

  // Mixed product rule.
  const CMatrix c = random_hermitian(2, 3);
  const CMatrix d = random_hermitian(3, 4);
  CHECK(max_abs_diff(tensor(a, b) * tensor(c, d), tensor(CMatrix(a * c), CMatrix(b * d))) <=
        1e-12);

  CHECK(max_abs_diff(tensor(CMatrix::Identity(2, 2), CMatrix::Identity(3, 3)),
                     CMatrix::Identity(6, 6)) == 0.0);
}

TEST_CASE("partial trace inverts tensor on product operators") {
  const CMatrix a = random_density(3, 4);
  const CMatrix b = random_density(4, 5);
  const CMatrix joint = tensor(a, b);
  CHECK(max_abs_diff(partial_trace(joint, 3, 4, Subsystem::kFirst), a) <= 1e-12);
  CHECK(max_abs_diff(partial_trace(joint, 3, 4, Subsystem::kSecond), b) <= 1e-12);
}

TEST_CASE("partial trace preserves the trace on generic operators") {
  const CMatrix joint = random_density(12, 6);
  const CMatrix first = partial_trace(joint, 3, 4, Subsystem::kFirst);
  const CMatrix second = partial_trace(joint, 3, 4, Subsystem::kSecond);
  CHECK(std::abs(first.trace() - joint.trace()) <= 1e-12);
  CHECK(std::abs(second.trace() - joint.trace()) <= 1e-12);
  CHECK(first.rows() == 3);
  CHECK(second.rows() == 4);
}

TEST_CASE("commutator matches pauli algebra") {
  CHECK(max_abs(commutator(kPauliX, kPauliX)) == 0.0);
  // [X, Z] = -2iY.
  CHECK(max_abs_diff(commutator(kPauliX, kPauliZ), CMatrix(Complex(0, -2) * kPauliY)) <=
        1e-15);
}

TEST_CASE("max_abs and max_abs_diff report the largest entry") {
  CMatrix m = CMatrix::Zero(2, 2);
  m(1, 0) = Complex(3, 4);
  CHECK(max_abs(m) == 5.0);
  CHECK(max_abs_diff(m, CMatrix::Zero(2, 2)) == 5.0);
}

TEST_CASE("hermitian_eigen reconstructs and sorts, rejects non-hermitian") {
  const CMatrix h = random_hermitian(6, 7);
  const HermitianEigen eig = hermitian_eigen(h);
  CMatrix rebuilt = CMatrix::Zero(6, 6);
  for (Index a = 0; a < 6; ++a)
    rebuilt += eig.values(a) * (eig.vectors.col(a) * eig.vectors.col(a).adjoint());
  CHECK(max_abs_diff(rebuilt, h) <= 1e-12);
  for (Index a = 1; a < 6; ++a) CHECK(eig.values(a) >= eig.values(a - 1));

  CMatrix bad = h;
  bad(0, 1) += Complex(0.0, 1e-6);
  CHECK_THROWS_AS(hermitian_eigen(bad), std::invalid_argument);
}

TEST_CASE("propagator is unitary and composes") {
  const CMatrix h = random_hermitian(5, 9);
  const HermitianEigen eig = hermitian_eigen(h);
  const CMatrix u1 = propagator(eig, 0.7);
  const CMatrix u2 = propagator(eig, 1.9);
  CHECK(max_abs_diff(u1 * u1.adjoint(), CMatrix::Identity(5, 5)) <= 1e-13);
  CHECK(max_abs_diff(u1 * u2, propagator(eig, 2.6)) <= 1e-13);
  CHECK(max_abs_diff(propagator(eig, 0.0), CMatrix::Identity(5, 5)) <= 1e-14);
}

TEST_CASE("evolve conjugates by the propagator") {
  const CMatrix h = random_hermitian(4, 11);
  const HermitianEigen eig = hermitian_eigen(h);
  const CMatrix op = random_density(4, 12);
  const CMatrix u = propagator(eig, 1.3);
  CHECK(max_abs_diff(evolve(op, eig, 1.3), CMatrix(u * op * u.adjoint())) <= 1e-13);
  CHECK(max_abs_diff(evolve_unitary(op, h, 1.3), evolve(op, eig, 1.3)) <= 1e-13);
  // Energy is conserved under its own flow.
  CHECK(std::abs((evolve(op, eig, 2.1) * h).trace() - (op * h).trace()) <= 1e-12);
}

TEST_CASE("apply_to_spectrum applies scalar functions") {
  const CMatrix h = random_hermitian(4, 13);
  const HermitianEigen eig = hermitian_eigen(h);
  CHECK(max_abs_diff(apply_to_spectrum(eig, [](double x) { return x; }), h) <= 1e-12);
  const CMatrix sq = apply_to_spectrum(eig, [](double x) { return x * x; });
  CHECK(max_abs_diff(sq, CMatrix(h * h)) <= 1e-12);
}

TEST_CASE("entropy matches pinned values") {
  CMatrix rho = CMatrix::Zero(2, 2);
  rho(0, 0) = 0.25;
  rho(1, 1) = 0.75;
  CHECK(von_neumann_entropy(rho) == doctest::Approx(0.5623351446188083).epsilon(1e-13));

  Substream rng(19, "test/pure");
  const CVector psi = random_unit_vector(5, rng);
  CHECK(von_neumann_entropy(pure_density(psi)) <= 1e-10);

  const CMatrix mixed = CMatrix::Identity(3, 3) / 3.0;
  CHECK(von_neumann_entropy(mixed) == doctest::Approx(std::log(3.0)).epsilon(1e-13));
}

TEST_CASE("trace distance matches pinned values and is unitary invariant") {
  CMatrix a(2, 2);
  a << Complex(0.7), Complex(0.2, 0.1), Complex(0.2, -0.1), Complex(0.3);
  const CMatrix half = CMatrix::Identity(2, 2) * 0.5;
  CHECK(trace_distance(a, half) == doctest::Approx(0.3).epsilon(1e-13));

  CMatrix b = CMatrix::Zero(2, 2);
  b(0, 0) = 0.9;
  b(1, 1) = 0.1;
  CHECK(trace_distance(b, half) == doctest::Approx(0.4).epsilon(1e-13));

  CHECK(trace_distance(a, a) <= 1e-14);
  CHECK(std::abs(trace_distance(a, b) - trace_distance(b, a)) <= 1e-14);

  Substream rng(21, "test/unitary");
  const CMatrix u = haar_unitary(2, rng);
  CHECK(std::abs(trace_distance(CMatrix(u * a * u.adjoint()), CMatrix(u * b * u.adjoint())) -
                 trace_distance(a, b)) <= 1e-12);
}

TEST_CASE("check_density accepts densities and flags defects") {
  const CMatrix good = random_density(4, 17);
  const DensityCheck ok = check_density(good);
  CHECK(ok.ok);
  CHECK(ok.trace_defect <= 1e-12);
  CHECK(ok.min_eigenvalue >= -1e-12);

  CHECK_FALSE(check_density(CMatrix(2.0 * good)).ok);

  CMatrix indefinite = CMatrix::Zero(2, 2);
  indefinite(0, 0) = 1.5;
  indefinite(1, 1) = -0.5;
  CHECK_FALSE(check_density(indefinite).ok);

  CMatrix skew = good;
  skew(0, 1) += Complex(0.0, 1e-3);
  CHECK_FALSE(check_density(skew).ok);
}

TEST_CASE("basis vectors, pure densities, and expectations") {
  const CVector e2 = basis_state(4, 2);
  CHECK(e2.size() == 4);
  CHECK(std::abs(e2(2) - Complex(1.0)) == 0.0);
  CHECK(std::abs(e2.norm() - 1.0) == 0.0);

  const CMatrix rho = pure_density(e2);
  CHECK(std::abs(rho.trace() - Complex(1.0)) <= 1e-15);
  CHECK(max_abs_diff(rho * rho, rho) <= 1e-15);

  CMatrix diag = CMatrix::Zero(2, 2);
  diag(0, 0) = 0.7;
  diag(1, 1) = 0.3;
  CHECK(real_expectation(kPauliZ, diag) == doctest::Approx(0.4).epsilon(1e-14));
}
