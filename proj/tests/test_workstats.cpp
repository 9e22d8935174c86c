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

#include <numbers>
#include <random>

#include "oracles.hpp"
#include "qwork/models.hpp"
#include "qwork/workstats.hpp"

using namespace qwork;
using Catch::Matchers::WithinAbs;

namespace {

WorkDistribution flip_distribution() {
  const auto p = models::qubit_flip();
  return tpm_distribution(gibbs(p.h0(), 1.0).state, p);
}

}  // namespace

TEST_CASE("flip distribution has two atoms", "[workstats]") {
  const auto d = flip_distribution();
  REQUIRE(d.size() == 2);
  CHECK_THAT(d.atoms()[0].w, WithinAbs(-1.0, 1e-14));
  CHECK_THAT(d.atoms()[0].p, WithinAbs(oracle::kPMinus, 1e-12));
  CHECK_THAT(d.atoms()[1].w, WithinAbs(1.0, 1e-14));
  CHECK_THAT(d.atoms()[1].p, WithinAbs(oracle::kPPlus, 1e-12));
  CHECK_THAT(d.atoms()[1].p, WithinAbs(0.731059, 1e-6));
}

TEST_CASE("no-transition protocols give point masses", "[workstats]") {
  std::mt19937_64 rng(1);
  const auto h = HermitianOperator::diagonal({0.0, 0.4, 1.3});
  const auto d = tpm_distribution(models::random_diagonal_density(3, rng), Protocol::quench(h, h));
  REQUIRE(d.size() == 1);
  CHECK_THAT(d.atoms()[0].w, WithinAbs(0.0, 1e-14));
  CHECK_THAT(d.atoms()[0].p, WithinAbs(1.0, 1e-12));

  const auto s = models::uniform_shift();
  const auto ds = tpm_distribution(gibbs(s.h0(), 1.0).state, s);
  REQUIRE(ds.size() == 1);
  CHECK_THAT(ds.atoms()[0].w, WithinAbs(0.5, 1e-14));
}

TEST_CASE("TPM matches a brute-force eigenvector enumeration", "[workstats][property]") {
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 15; ++trial) {
    const std::size_t n = 2 + trial % 4;
    const auto p = (trial % 2) ? models::random_protocol(n, rng) : models::random_commensurate(n, rng);
    const auto g = gibbs(p.h0(), 0.5 + 0.1 * trial);
    const auto d = tpm_distribution(g.state, p);
    const auto ref = oracle::brute_tpm(g.state.matrix(), p.h0().matrix(), p.htau().matrix(), build_unitary(p).matrix());
    double total = 0.0;
    for (const auto& a : d.atoms()) total += a.p;
    CHECK_THAT(total, WithinAbs(1.0, 1e-12));
    for (double eta : {-1.0, -0.3, 0.4, 1.2}) {
      CHECK_THAT(cgf_direct(d, eta), WithinAbs(oracle::brute_cgf(ref, eta), 1e-9));
    }
  }
}

TEST_CASE("atoms within the merge tolerance combine", "[workstats]") {
  const WorkDistribution d({{1.0, 0.25}, {1.0 + 1e-12, 0.25}, {2.0, 0.5}});
  REQUIRE(d.size() == 2);
  CHECK_THAT(d.atoms()[0].p, WithinAbs(0.5, 1e-15));
  const WorkDistribution tiny({{0.0, 1.0 - 1e-17}, {3.0, 1e-17}});
  CHECK(tiny.size() == 1);
  CHECK_THROWS_AS(WorkDistribution({{0.0, 0.5}, {1.0, 0.4}}), ValidationError);
  CHECK_THROWS_AS(WorkDistribution({{0.0, 1.5}, {1.0, -0.5}}), ValidationError);
}

TEST_CASE("moments and cumulants of reference distributions", "[workstats]") {
  const auto d = flip_distribution();
  CHECK_THAT(moment(d, 0), WithinAbs(1.0, 1e-15));
  CHECK_THAT(moment(d, 1), WithinAbs(oracle::kFlipMean, 1e-12));
  CHECK_THAT(moment(d, 1), WithinAbs(0.462117, 1e-6));
  CHECK_THAT(moment(d, 2), WithinAbs(1.0, 1e-12));
  const auto k = cumulants(d, 2);
  CHECK_THAT(k[0], WithinAbs(oracle::kFlipMean, 1e-12));
  CHECK_THAT(k[1], WithinAbs(oracle::kFlipVar, 1e-12));
  CHECK_THAT(k[1], WithinAbs(0.786448, 1e-6));

  const auto pm = cumulants(WorkDistribution::point_mass(0.5), 4);
  CHECK_THAT(pm[0], WithinAbs(0.5, 1e-15));
  for (int i = 1; i < 4; ++i) CHECK_THAT(pm[static_cast<std::size_t>(i)], WithinAbs(0.0, 1e-15));

  const auto sym = cumulants(WorkDistribution({{-1.0, 0.5}, {1.0, 0.5}}), 2);
  CHECK_THAT(sym[0], WithinAbs(0.0, 1e-15));
  CHECK_THAT(sym[1], WithinAbs(1.0, 1e-15));

  CHECK_THROWS_AS(moment(d, -1), ValidationError);
  CHECK_THROWS_AS(moment(d, 9), ValidationError);
  CHECK_THROWS_AS(cumulants(d, 0), ValidationError);
  CHECK_THROWS_AS(cumulants(d, 5), ValidationError);
}

TEST_CASE("cumulants are signed derivatives of the CGF", "[workstats][property]") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 5; ++trial) {
    const auto p = models::random_protocol(3, rng);
    const auto d = tpm_distribution(gibbs(p.h0(), 1.0).state, p);
    const auto k = cumulants(d, 4);
    const double h = 2e-3;
    auto phi = [&](double x) { return cgf_direct(d, x); };
    const double d1 = (phi(-2 * h) - 8 * phi(-h) + 8 * phi(h) - phi(2 * h)) / (12 * h);
    const double d2 = (-phi(2 * h) + 16 * phi(h) - 30 * phi(0) + 16 * phi(-h) - phi(-2 * h)) / (12 * h * h);
    const double d3 = (phi(2 * h) - 2 * phi(h) + 2 * phi(-h) - phi(-2 * h)) / (2 * h * h * h);
    const double d4 = (phi(2 * h) - 4 * phi(h) + 6 * phi(0) - 4 * phi(-h) + phi(-2 * h)) / (h * h * h * h);
    CHECK_THAT(k[0], WithinAbs(-d1, 1e-6));
    CHECK_THAT(k[1], WithinAbs(d2, 1e-5));
    CHECK_THAT(k[2], WithinAbs(-d3, 1e-4 * (1.0 + std::abs(k[2]))));
    CHECK_THAT(k[3], WithinAbs(d4, 1e-3 * (1.0 + std::abs(k[3]))));
  }
}

TEST_CASE("direct CGF reference values", "[workstats]") {
  const auto d = flip_distribution();
  CHECK_THAT(cgf_direct(d, 1.0), WithinAbs(0.0, 1e-14));
  CHECK(cgf_direct(d, 0.0) == 0.0);
  CHECK_THAT(cgf_direct(d, 0.5), WithinAbs(oracle::flip_cgf(0.5), 1e-14));
  CHECK_THAT(cgf_direct(d, 0.5), WithinAbs(-0.1201145, 1e-7));
  // far tails do not overflow
  CHECK_THAT(cgf_direct(d, 800.0), WithinAbs(800.0 + std::log(oracle::kPMinus), 1e-9));
}

TEST_CASE("CGF is convex in eta", "[workstats][property]") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    const auto p = models::random_protocol(3, rng);
    const auto d = tpm_distribution(gibbs(p.h0(), 0.8).state, p);
    for (double eta = -2.0; eta <= 2.0; eta += 0.25) {
      const double second = cgf_direct(d, eta + 0.1) - 2 * cgf_direct(d, eta) + cgf_direct(d, eta - 0.1);
      CHECK(second >= -1e-12);
    }
  }
}

TEST_CASE("characteristic function", "[workstats]") {
  const auto d = flip_distribution();
  CHECK(std::abs(characteristic_fn(d, 0.0) - Complex(1.0, 0.0)) < 1e-15);
  CHECK(std::abs(characteristic_fn(d, std::numbers::pi) - Complex(-1.0, 0.0)) < 1e-12);
  std::mt19937_64 rng(19);
  const auto p = models::random_protocol(4, rng);
  const auto dr = tpm_distribution(gibbs(p.h0(), 1.0).state, p);
  for (double eta : {0.3, 1.1, 2.7}) {
    CHECK(std::abs(characteristic_fn(dr, -eta) - std::conj(characteristic_fn(dr, eta))) < 1e-14);
    CHECK(std::abs(characteristic_fn(dr, eta)) <= 1.0 + 1e-14);
  }
}

TEST_CASE("full counting statistics form", "[workstats]") {
  const auto flip = models::qubit_flip();
  const auto g = gibbs(flip.h0(), 1.0);
  CHECK_THAT(cgf_fcs(g.state, flip, 1.0), WithinAbs(0.0, 1e-13));
  CHECK_THAT(cgf_fcs(g.state, flip, 0.0), WithinAbs(0.0, 1e-14));
  CHECK_THAT(cgf_fcs(g.state, flip, 0.5), WithinAbs(oracle::flip_cgf(0.5), 1e-13));

  const auto shift = models::uniform_shift();
  CHECK_THAT(cgf_fcs(gibbs(shift.h0(), 1.0).state, shift, 2.0), WithinAbs(-1.0, 1e-13));

  // needs an initial state diagonal in the H0 eigenbasis
  const Eigen::VectorXcd plus = Eigen::VectorXcd::Constant(2, 1.0 / std::sqrt(2.0));
  CHECK_THROWS_AS(cgf_fcs(DensityMatrix::pure(plus), flip, 0.5), PreconditionError);
}

TEST_CASE("FCS form equals the direct CGF for commuting initial states", "[workstats][property]") {
  std::mt19937_64 rng(53);
  for (int trial = 0; trial < 10; ++trial) {
    const auto p = models::random_protocol(2 + trial % 3, rng);
    const auto g = gibbs(p.h0(), 1.3);
    const auto d = tpm_distribution(g.state, p);
    for (double eta : {-2.0, -0.7, 0.3, 1.3, 2.5}) {
      CHECK_THAT(cgf_fcs(g.state, p, eta), WithinAbs(cgf_direct(d, eta), 1e-10));
    }
  }
}

TEST_CASE("sampling", "[workstats]") {
  const auto pm = sample(WorkDistribution::point_mass(0.5), 100, 9);
  for (double w : pm.samples) CHECK(w == 0.5);

  const auto d = flip_distribution();
  const auto s = sample(d, 100000, 42);
  double total = 0.0;
  for (double w : s.samples) total += w;
  CHECK_THAT(total / 1e5, WithinAbs(oracle::kFlipMean, 0.01));

  CHECK(sample(d, 500, 42).samples == sample(d, 500, 42).samples);
  CHECK(sample(d, 500, 42).samples != sample(d, 500, 43).samples);
  CHECK_THROWS_AS(sample(d, 0, 1), ValidationError);

  const auto sums = sample_copy_sums(d, 10, 200, 5);
  REQUIRE(sums.size() == 200);
  for (double t : sums) CHECK(std::abs(t) <= 10.0 + 1e-12);
}

TEST_CASE("distribution distance", "[workstats]") {
  const auto a = flip_distribution();
  const auto same = distribution_distance(a, a);
  CHECK(same.same_support);
  CHECK(same.max_p == 0.0);
  const auto other = distribution_distance(a, WorkDistribution::point_mass(0.0));
  CHECK_FALSE(other.same_support);
}
