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

#ifndef QMSIM_RNG_HPP_
#define QMSIM_RNG_HPP_

#include <cmath>
#include <cstdint>
#include <string_view>

#include "qmsim/types.hpp"

namespace qmsim {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

inline std::uint64_t rotl64(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

}  // namespace detail

// Deterministic random stream keyed by (master seed, label, index).
//
// Every randomized quantity in the library draws from its own substream, so
// results do not depend on the order in which components consume randomness.
// The state is seeded through splitmix64 and advanced with xoshiro256**;
// Gaussians use the polar method so the byte-level output is identical on
// every platform (no reliance on std::normal_distribution internals).
class Substream {
 public:
  Substream(std::uint64_t master, std::string_view label, std::uint64_t index = 0) {
    std::uint64_t x = master;
    const std::uint64_t h = detail::fnv1a64(label);
    x ^= h + 0x9E3779B97F4A7C15ull + (x << 6) + (x >> 2);
    x ^= (index + 1) * 0xD1B54A32D192ED03ull;
    for (auto& word : state_) word = detail::splitmix64(x);
    if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 1;
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = detail::rotl64(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = detail::rotl64(state_[3], 45);
    return result;
  }

  // Uniform in [0, 1) with 53 bits of precision.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double next_gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * next_double() - 1.0;
      v = 2.0 * next_double() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    has_spare_ = true;
    return u * m;
  }

  Complex next_complex_gaussian() {
    const double re = next_gaussian();
    const double im = next_gaussian();
    return {re, im};
  }

 private:
  std::uint64_t state_[4] = {};
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Matrix with independent standard complex Gaussian entries (unit variance
// per real component).
inline CMatrix gaussian_complex_matrix(Index rows, Index cols, Substream& rng) {
  CMatrix a(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) a(i, j) = rng.next_complex_gaussian();
  return a;
}

// GUE sample normalized so the spectrum converges to a semicircle supported
// on [-2*bandwidth, 2*bandwidth] as n grows.
inline CMatrix random_gue(Index n, double bandwidth, Substream& rng) {
  const CMatrix a = gaussian_complex_matrix(n, n, rng);
  return (a + a.adjoint()) * (bandwidth / (2.0 * std::sqrt(static_cast<double>(n))));
}

// Haar-distributed unitary via QR of a Gaussian matrix with the phase fix
// that makes the factorization unique.
inline CMatrix haar_unitary(Index n, Substream& rng) {
  const CMatrix a = gaussian_complex_matrix(n, n, rng);
  Eigen::HouseholderQR<CMatrix> qr(a);
  CMatrix q = qr.householderQ();
  const CMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index j = 0; j < n; ++j) {
    const Complex d = r(j, j);
    const double mag = std::abs(d);
    q.col(j) *= (mag > 0.0) ? d / mag : Complex(1.0, 0.0);
  }
  return q;
}

// First `cols` columns of a Haar unitary: a uniformly random isometry.
inline CMatrix haar_isometry(Index rows, Index cols, Substream& rng) {
  return haar_unitary(rows, rng).leftCols(cols);
}

inline CVector random_unit_vector(Index n, Substream& rng) {
  CVector v(n);
  for (Index i = 0; i < n; ++i) v(i) = rng.next_complex_gaussian();
  return v / v.norm();
}

}  // namespace qmsim

#endif  // QMSIM_RNG_HPP_
