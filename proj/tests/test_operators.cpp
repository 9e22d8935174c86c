// Copyright 2026 The qwork Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <catch_amalgamated.hpp>

#include <random>

#include "oracles.hpp"
#include "qwork/models.hpp"
#include "qwork/operators.hpp"

using namespace qwork;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("spectral decomposition of simple operators", "[operators]") {
  const auto id = spectral(HermitianOperator::identity(2), 1e-9);
  REQUIRE(id.size() == 1);
  CHECK_THAT(id.eigenvalues[0], WithinAbs(1.0, 1e-14));
  CHECK(max_abs(id.projectors[0] - Matrix::Identity(2, 2)) < 1e-14);

  const auto d = spectral(HermitianOperator::diagonal({0.0, 1.0}), 1e-9);
  REQUIRE(d.size() == 2);
  CHECK_THAT(d.eigenvalues[0], WithinAbs(0.0, 1e-14));
  CHECK_THAT(d.eigenvalues[1], WithinAbs(1.0, 1e-14));
  for (const auto& p : d.projectors) CHECK_THAT(p.trace().real(), WithinAbs(1.0, 1e-14));
}

TEST_CASE("spectral reconstruction and projector algebra on random operators", "[operators][property]") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 + trial % 5;
    const auto h = models::random_hermitian(n, rng);
    const auto& sd = h.spectral();
    CHECK(max_abs(sd.reconstruct() - h.matrix()) < 1e-10);
    Matrix sum = Matrix::Zero(h.matrix().rows(), h.matrix().cols());
    for (std::size_t i = 0; i < sd.size(); ++i) {
      CHECK(max_abs(sd.projectors[i] * sd.projectors[i] - sd.projectors[i]) < 1e-10);
      for (std::size_t j = i + 1; j < sd.size(); ++j) CHECK(max_abs(sd.projectors[i] * sd.projectors[j]) < 1e-10);
      sum += sd.projectors[i];
    }
    CHECK(max_abs(sum - Matrix::Identity(sum.rows(), sum.cols())) < 1e-10);
    CHECK(std::is_sorted(sd.eigenvalues.begin(), sd.eigenvalues.end()));
  }
}

TEST_CASE("degenerate levels are grouped into one projector", "[operators]") {
  std::mt19937_64 rng(3);
  const Matrix r = models::random_unitary(4, rng).matrix();
  const HermitianOperator h(Matrix(r * HermitianOperator::diagonal({1.0, 1.0, 2.0, 2.0 + 1e-13}).matrix() * r.adjoint()),
                            1e-10);
  const auto& sd = h.spectral();
  REQUIRE(sd.size() == 2);
  CHECK_THAT(sd.projectors[0].trace().real(), WithinAbs(2.0, 1e-10));
  CHECK_THAT(sd.projectors[1].trace().real(), WithinAbs(2.0, 1e-10));
}

TEST_CASE("Hermitian validation rejects asymmetric input", "[operators][errors]") {
  Matrix m(2, 2);
  m << 0.0, 1.0, 0.0, 0.0;
  CHECK_THROWS_AS(HermitianOperator(m), ValidationError);
  Matrix nan = Matrix::Zero(2, 2);
  nan(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(HermitianOperator(nan), ValidationError);
}

TEST_CASE("matrix functions follow the scalar map per eigenvalue", "[operators]") {
  const auto e = apply_function(HermitianOperator::diagonal({0.0, -1.0}), [](double x) { return std::exp(x); });
  CHECK_THAT(e.matrix()(0, 0).real(), WithinAbs(1.0, 1e-14));
  CHECK_THAT(e.matrix()(1, 1).real(), WithinAbs(std::exp(-1.0), 1e-14));

  const auto s = apply_function(HermitianOperator::diagonal({0.25, 0.81}), [](double x) { return std::sqrt(x); });
  CHECK_THAT(s.matrix()(0, 0).real(), WithinAbs(0.5, 1e-14));
  CHECK_THAT(s.matrix()(1, 1).real(), WithinAbs(0.9, 1e-14));

  std::mt19937_64 rng(5);
  const auto h = models::random_hermitian(5, rng);
  CHECK(max_abs(apply_function(h, [](double x) { return x; }).matrix() - h.matrix()) < 1e-12);

  // independent Schur-Pade exponential
  const Matrix eh = h.matrix().exp();
  CHECK(max_abs(qwork::exp(h).matrix() - eh) < 1e-10 * (1.0 + max_abs(eh)));
}

TEST_CASE("matrix functions reject non-finite results", "[operators][errors]") {
  CHECK_THROWS_AS(qwork::log(HermitianOperator::diagonal({0.0, 1.0})), DomainError);
  CHECK_THROWS_AS(apply_function(HermitianOperator::diagonal({-1.0, 1.0}), [](double x) { return std::sqrt(x); }),
                  DomainError);
}

TEST_CASE("psd powers agree with an independent matrix power", "[operators][property]") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    const auto rho = models::random_density(3, rng, 0.05);
    for (double p : {0.5, 0.25, 1.7, -0.5}) {
      const Matrix ref = rho.matrix().pow(p);
      CHECK(max_abs(psd_power(rho, p).matrix() - ref) < 1e-9 * (1.0 + max_abs(ref)));
    }
  }
  // zero eigenvalues stay zero for positive powers
  const auto proj = psd_power(HermitianOperator::diagonal({0.0, 4.0}), 0.5);
  CHECK_THAT(proj.matrix()(0, 0).real(), WithinAbs(0.0, 1e-15));
  CHECK_THAT(proj.matrix()(1, 1).real(), WithinAbs(2.0, 1e-14));
}

TEST_CASE("Gibbs states of two-level systems", "[operators]") {
  const auto g = gibbs(HermitianOperator::diagonal({0.0, 1.0}), 1.0);
  CHECK_THAT(g.state.matrix()(0, 0).real(), WithinAbs(oracle::kPPlus, 1e-12));
  CHECK_THAT(g.state.matrix()(1, 1).real(), WithinAbs(oracle::kPMinus, 1e-12));
  CHECK_THAT(g.Z, WithinAbs(1.0 + std::exp(-1.0), 1e-12));
  CHECK_THAT(g.F, WithinAbs(-oracle::kLogZFlip, 1e-12));
  CHECK_THAT(g.Z, WithinAbs(1.367879, 1e-6));
  CHECK_THAT(g.F, WithinAbs(-0.313262, 1e-6));

  const auto mixed = gibbs(HermitianOperator::zero(2), 3.7);
  CHECK(max_abs(mixed.state.matrix() - Matrix::Identity(2, 2) / 2.0) < 1e-14);
  CHECK_THAT(mixed.Z, WithinAbs(2.0, 1e-14));

  const auto shifted = gibbs(HermitianOperator::diagonal({0.5, 1.5}), 1.0);
  CHECK_THAT(shifted.Z, WithinRel(std::exp(-0.5) * (1.0 + std::exp(-1.0)), 1e-12));
  CHECK_THAT(shifted.F, WithinAbs(0.5 - oracle::kLogZFlip, 1e-12));
}

TEST_CASE("Gibbs state is stable at large beta*E", "[operators]") {
  const auto g = gibbs(HermitianOperator::diagonal({1000.0, 1001.0}), 5.0);
  CHECK(std::isfinite(g.log_Z));
  CHECK_THAT(g.F, WithinAbs(1000.0 - std::log1p(std::exp(-5.0)) / 5.0, 1e-10));
  CHECK_THROWS_AS(gibbs(HermitianOperator::diagonal({0.0, 1.0}), 0.0), ValidationError);
  CHECK_THROWS_AS(gibbs(HermitianOperator::diagonal({0.0, 1.0}), -1.0), ValidationError);
}

TEST_CASE("Gibbs states match the Schur-Pade exponential", "[operators][property]") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    const auto h = models::random_hermitian(4, rng);
    const double beta = 0.3 + 0.4 * trial;
    CHECK(max_abs(gibbs(h, beta).state.matrix() - oracle::gibbs(h.matrix(), beta)) < 1e-10);
  }
}

TEST_CASE("free energy shifts with a constant offset", "[operators][property]") {
  std::mt19937_64 rng(29);
  const auto h = models::random_hermitian(3, rng);
  const auto p = thermo_potentials(h, h.shifted(0.5), 2.0);
  CHECK_THAT(p.deltaF, WithinAbs(0.5, 1e-12));
  CHECK_THAT(p.log_Ztau - p.log_Z0, WithinAbs(-1.0, 1e-12));
}

TEST_CASE("density matrix validation", "[operators][errors]") {
  CHECK_THROWS_AS(DensityMatrix::from_populations({0.5, 0.6}), ValidationError);
  CHECK_THROWS_AS(DensityMatrix::from_populations({1.2, -0.2}), ValidationError);
  CHECK_NOTHROW(DensityMatrix::from_populations({0.25, 0.75}));
  CHECK_THAT(DensityMatrix::maximally_mixed(4).purity(), WithinAbs(0.25, 1e-14));
  CHECK_THAT(DensityMatrix::basis_state(3, 1).purity(), WithinAbs(1.0, 1e-14));
}

TEST_CASE("partial traces of product operators", "[operators]") {
  std::mt19937_64 rng(31);
  const auto a = models::random_density(2, rng);
  const auto b = models::random_density(3, rng);
  const Matrix ab = kron(a.matrix(), b.matrix());
  CHECK(max_abs(partial_trace_second(ab, 2, 3) - a.matrix()) < 1e-14);
  CHECK(max_abs(partial_trace_first(ab, 2, 3) - b.matrix()) < 1e-14);
}
