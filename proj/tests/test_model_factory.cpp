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

#include "qmsim/model_factory.hpp"
#include "qmsim/operator_algebra.hpp"
#include "qmsim/rng.hpp"

using namespace qmsim;

namespace {

CMatrix diag2(double a, double b) {
  CMatrix m = CMatrix::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return m;
}

CMatrix plus_x_density() {
  CMatrix r(2, 2);
  r << 0.5, 0.5, 0.5, 0.5;
  return r;
}

MeasurementModel small_ergodic_model(std::uint64_t seed) {
  const CMatrix observable = diag2(0.5, -0.5);
  const TestedSystemSpec system =
      make_tested_system(observable, CMatrix::Zero(2, 2), plus_x_density());
  const ApparatusSpec apparatus =
      make_ergodic_apparatus(2, 4, 1.0, 5.0, default_pointer_values(2), seed);
  ScheduleSpec schedule;
  schedule.t_off = 1.0;
  schedule.t_split = 2.0;
  schedule.t_f = 8.0;
  schedule.grid_points = 40;
  return assemble_model(system, apparatus, schedule, 1.0, seed);
}

}  // namespace

TEST_CASE("projector_family groups eigenvalues and orders outcomes descending") {
  CMatrix obs = CMatrix::Zero(3, 3);
  obs(0, 0) = 1.0;
  obs(1, 1) = -1.0;
  obs(2, 2) = 1.0;
  const ProjectorFamily family = projector_family(obs);
  REQUIRE(family.n_out() == 2);
  CHECK(family.outcomes[0] == doctest::Approx(1.0));
  CHECK(family.outcomes[1] == doctest::Approx(-1.0));
  CHECK(std::abs(family.projectors[0].trace() - Complex(2.0)) <= 1e-12);
  CHECK(std::abs(family.projectors[1].trace() - Complex(1.0)) <= 1e-12);

  CMatrix sum = CMatrix::Zero(3, 3);
  for (const CMatrix& pi : family.projectors) {
    sum += pi;
    CHECK(max_abs_diff(pi * pi, pi) <= 1e-12);
    CHECK(max_abs(pi - pi.adjoint()) <= 1e-12);
  }
  CHECK(max_abs_diff(sum, CMatrix::Identity(3, 3)) <= 1e-12);
  for (std::size_t i = 0; i < family.projectors.size(); ++i)
    for (std::size_t j = i + 1; j < family.projectors.size(); ++j)
      CHECK(max_abs(family.projectors[i] * family.projectors[j]) <= 1e-12);
}

TEST_CASE("projector_family merges near-degenerate eigenvalues") {
  CMatrix obs = CMatrix::Zero(3, 3);
  obs(0, 0) = 0.5;
  obs(1, 1) = 0.5 + 1e-12;
  obs(2, 2) = -0.5;
  CHECK(projector_family(obs).n_out() == 2);
  CHECK(projector_family(obs, 1e-14).n_out() == 3);
}

TEST_CASE("make_tested_system validates its inputs") {
  const CMatrix z = diag2(0.5, -0.5);

  const TestedSystemSpec good =
      make_tested_system(z, CMatrix::Zero(2, 2), plus_x_density());
  CHECK(good.dim == 2);
  CHECK(good.family.n_out() == 2);

  // A system energy that fails to commute with the observable.
  CMatrix x(2, 2);
  x << 0, 1, 1, 0;
  CHECK_THROWS_AS(make_tested_system(z, x, diag2(0.5, 0.5)), std::invalid_argument);

  // A system energy that commutes with the observable but not the state.
  CHECK_THROWS_AS(make_tested_system(z, z, plus_x_density()), std::invalid_argument);
  CHECK_NOTHROW(make_tested_system(z, z, diag2(0.7, 0.3)));

  // Not a density operator.
  CHECK_THROWS_AS(make_tested_system(z, CMatrix::Zero(2, 2), CMatrix(2.0 * plus_x_density())),
                  std::invalid_argument);
}

TEST_CASE("dephasing apparatus stores the exact subunit field pattern") {
  RVector g(2);
  g << 0.7, 1.1;
  const ApparatusSpec spec = make_dephasing_apparatus(2, 2, g, {1.0, -1.0});
  CHECK(spec.diagonal);
  CHECK(spec.dim == 4);
  REQUIRE(spec.sectors.size() == 1);
  CHECK(spec.sectors[0].levels == 4);
  CHECK(max_abs(spec.dense_hamiltonian()) == 0.0);

  // Level z reads its subunit signs off its bits; a clear bit contributes +g.
  RVector field(4);
  field << g(0) + g(1), -g(0) + g(1), g(0) - g(1), -g(0) - g(1);
  REQUIRE(spec.source_diags.size() == 2);
  CHECK((spec.source_diags[0] - field).cwiseAbs().maxCoeff() == 0.0);
  CHECK((spec.source_diags[1] + field).cwiseAbs().maxCoeff() == 0.0);

  CHECK((spec.initial_diag.array() - 0.25).abs().maxCoeff() == 0.0);

  CHECK_THROWS_AS(make_dephasing_apparatus(2, 0, RVector::Zero(0), {1.0, -1.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(make_dephasing_apparatus(2, 2, g, {1.0}), std::invalid_argument);
}

TEST_CASE("dephasing couplings are deterministic and in range") {
  const RVector g1 = draw_dephasing_couplings(12, 0.5, 1.5, 42);
  const RVector g2 = draw_dephasing_couplings(12, 0.5, 1.5, 42);
  const RVector g3 = draw_dephasing_couplings(12, 0.5, 1.5, 43);
  REQUIRE(g1.size() == 12);
  CHECK((g1 - g2).cwiseAbs().maxCoeff() == 0.0);
  CHECK((g1 - g3).cwiseAbs().maxCoeff() > 0.0);
  CHECK(g1.minCoeff() >= 0.5);
  CHECK(g1.maxCoeff() < 1.5);
}

TEST_CASE("ergodic apparatus has sectored structure and a metastable start") {
  const Index n_out = 2;
  const Index levels = 8;
  const ApparatusSpec spec =
      make_ergodic_apparatus(n_out, levels, 1.0, 5.0, default_pointer_values(n_out), 7);
  CHECK_FALSE(spec.diagonal);
  CHECK(spec.dim == 16);
  REQUIRE(spec.sectors.size() == 2);
  CHECK(spec.sectors[0].offset == 0);
  CHECK(spec.sectors[1].offset == 8);
  CHECK(spec.pointer_gap == doctest::Approx(1.0));

  // Block-diagonal hermitian energy; no cross-sector matrix elements.
  CHECK(max_abs(spec.hamiltonian - spec.hamiltonian.adjoint()) <= 1e-15);
  CHECK(max_abs(spec.hamiltonian.block(0, 8, 8, 8)) == 0.0);
  CHECK(max_abs(spec.hamiltonian.block(8, 0, 8, 8)) == 0.0);

  // Sources pull the own sector down by source_strength * bandwidth.
  for (Index i = 0; i < n_out; ++i)
    CHECK(max_abs_diff(spec.sources[static_cast<std::size_t>(i)],
                       CMatrix(-5.0 * spec.sector_projector(i))) <= 1e-12);

  // Initial state: uniform over the lower half of each sector's levels,
  // diagonal in the level basis and generically not stationary under the
  // sector blocks, so it can spread toward the sector-wide mixture.
  const DensityCheck dc = check_density(spec.initial_state);
  CHECK(dc.ok);
  for (Index i = 0; i < n_out; ++i) {
    const Index off = spec.sectors[static_cast<std::size_t>(i)].offset;
    for (Index k = 0; k < levels; ++k) {
      const double expected = k < levels / 2 ? 1.0 / 8.0 : 0.0;
      CHECK(std::abs(spec.initial_state(off + k, off + k).real() - expected) <=
            1e-15);
    }
  }
  const CMatrix diag_part(spec.initial_state.diagonal().asDiagonal());
  CHECK(max_abs(spec.initial_state - diag_part) == 0.0);
  CHECK(max_abs(commutator(spec.initial_state, spec.hamiltonian)) > 1e-3);
  for (Index i = 0; i < n_out; ++i)
    CHECK(std::abs((spec.sector_projector(i) * spec.initial_state).trace().real() - 0.5) <=
          1e-12);

  // Pointer observable is constant across each sector.
  const CMatrix pointer = spec.pointer_observable();
  for (Index z = 0; z < 8; ++z) {
    CHECK(pointer(z, z).real() == doctest::Approx(0.5));
    CHECK(pointer(z + 8, z + 8).real() == doctest::Approx(-0.5));
  }
}

TEST_CASE("default pointer values are unit-gap, centered, descending") {
  const std::vector<double> two = default_pointer_values(2);
  REQUIRE(two.size() == 2);
  CHECK(two[0] == doctest::Approx(0.5));
  CHECK(two[1] == doctest::Approx(-0.5));

  const std::vector<double> three = default_pointer_values(3);
  REQUIRE(three.size() == 3);
  CHECK(three[0] == doctest::Approx(1.0));
  CHECK(three[1] == doctest::Approx(0.0));
  CHECK(three[2] == doctest::Approx(-1.0));
}

TEST_CASE("time grids are strictly increasing and hit the endpoints") {
  ScheduleSpec schedule;
  schedule.t_off = 1.0;
  schedule.t_split = 2.0;
  schedule.t_f = 50.0;
  schedule.grid_points = 200;
  const std::vector<double> grid = time_grid(schedule);
  REQUIRE(grid.size() == 200);
  CHECK(grid.front() == 0.0);
  CHECK(grid.back() == doctest::Approx(50.0).epsilon(1e-12));
  for (std::size_t k = 1; k < grid.size(); ++k) CHECK(grid[k] > grid[k - 1]);

  const std::vector<double> uniform = uniform_grid(10.0, 5);
  REQUIRE(uniform.size() == 5);
  CHECK(uniform[0] == 0.0);
  CHECK(uniform[2] == doctest::Approx(5.0));
  CHECK(uniform[4] == doctest::Approx(10.0));
}

TEST_CASE("assemble_model validates schedule and source count") {
  const CMatrix observable = diag2(0.5, -0.5);
  const TestedSystemSpec system =
      make_tested_system(observable, CMatrix::Zero(2, 2), plus_x_density());
  const ApparatusSpec apparatus =
      make_ergodic_apparatus(2, 4, 1.0, 5.0, default_pointer_values(2), 1);

  ScheduleSpec bad;
  bad.t_off = 0.0;
  CHECK_THROWS_AS(assemble_model(system, apparatus, bad, 1.0, 1), std::invalid_argument);
  bad.t_off = 3.0;
  bad.t_split = 2.0;
  CHECK_THROWS_AS(assemble_model(system, apparatus, bad, 1.0, 1), std::invalid_argument);
  bad.t_off = 1.0;
  bad.t_split = 9.0;
  bad.t_f = 8.0;
  CHECK_THROWS_AS(assemble_model(system, apparatus, bad, 1.0, 1), std::invalid_argument);

  ScheduleSpec good;
  good.t_off = 1.0;
  good.t_split = 2.0;
  good.t_f = 8.0;
  CHECK_THROWS_AS(assemble_model(system, apparatus, good, -0.5, 1), std::invalid_argument);

  // Coupling on for the whole window is allowed.
  ScheduleSpec always_on;
  always_on.t_off = 8.0;
  always_on.t_split = 8.0;
  always_on.t_f = 8.0;
  CHECK_NOTHROW(assemble_model(system, apparatus, always_on, 1.0, 1));

  // One source per outcome.
  const ApparatusSpec three =
      make_ergodic_apparatus(3, 4, 1.0, 5.0, default_pointer_values(3), 1);
  CHECK_THROWS_AS(assemble_model(system, three, good, 1.0, 1), std::invalid_argument);
}

TEST_CASE("assembled dense model materializes the coupling and passes ideality") {
  const MeasurementModel model = small_ergodic_model(3);
  CHECK(model.joint_dim() == 16);
  REQUIRE(model.coupling.size() > 0);

  std::vector<CMatrix> sources;
  for (Index i = 0; i < 2; ++i) sources.push_back(model.apparatus.dense_source(i));
  CHECK(max_abs_diff(model.coupling, build_coupling(model.system.family, sources)) <=
        1e-12);

  const IdealityReport report = validate_ideality(model);
  CHECK(report.ok);
  CHECK(report.projector_defect <= kStructuralTol);
  CHECK(report.sector_commutant_defect <= kDerivedTol);
  CHECK(report.system_state_defect <= kStructuralTol);
  CHECK(report.pointer_defect <= kDerivedTol);
  CHECK(report.coupling_rebuild_defect <= kStructuralTol);

  const CMatrix h_coupled = full_hamiltonian(model, true);
  const CMatrix h_free = full_hamiltonian(model, false);
  CHECK(max_abs_diff(h_coupled - h_free, model.coupling) <= 1e-12);
}

TEST_CASE("large diagonal apparatus keeps the coupling implicit yet validates") {
  const CMatrix observable = diag2(0.5, -0.5);
  const TestedSystemSpec system =
      make_tested_system(observable, CMatrix::Zero(2, 2), plus_x_density());
  const RVector g = draw_dephasing_couplings(12, 0.5, 1.5, 42);
  const ApparatusSpec apparatus = make_dephasing_apparatus(2, 12, g, {1.0, -1.0});
  ScheduleSpec schedule;
  schedule.t_off = 50.0;
  schedule.t_split = 50.0;
  schedule.t_f = 50.0;
  const MeasurementModel model = assemble_model(system, apparatus, schedule, 1.0, 42);
  CHECK(model.coupling.size() == 0);
  CHECK(model.joint_dim() == 2 * 4096);
  CHECK(validate_ideality(model).ok);
}

TEST_CASE("densify reproduces the diagonal apparatus as dense operators") {
  RVector g(3);
  g << 0.6, 1.0, 1.4;
  const ApparatusSpec diag = make_dephasing_apparatus(2, 3, g, {1.0, -1.0});
  const ApparatusSpec dense = densify(diag);
  CHECK_FALSE(dense.diagonal);
  CHECK(dense.dim == 8);
  CHECK(max_abs_diff(dense.hamiltonian, diag.dense_hamiltonian()) == 0.0);
  CHECK(max_abs_diff(dense.initial_state, diag.dense_initial_state()) == 0.0);
  REQUIRE(dense.sources.size() == 2);
  for (Index i = 0; i < 2; ++i)
    CHECK(max_abs_diff(dense.sources[static_cast<std::size_t>(i)],
                       diag.dense_source(i)) == 0.0);
}
