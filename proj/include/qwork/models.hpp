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

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "qwork/dynamics.hpp"
#include "qwork/operators.hpp"

/// Named systems with fixed conventions, plus random generators for tests.
namespace qwork::models {

inline Matrix pauli_x() {
  Matrix m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}
inline Matrix pauli_z() {
  Matrix m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}

/// Single-site operator embedded at `site` of an n-spin chain (site 0 is the
/// most significant factor).
inline Matrix site_operator(const Matrix& op, std::size_t site, std::size_t n) {
  Matrix out = Matrix::Identity(1, 1);
  for (std::size_t i = 0; i < n; ++i) out = kron(out, i == site ? op : Matrix(Matrix::Identity(2, 2)));
  return out;
}

/// H0 = Htau = diag(0, gap), U = sigma_x.
inline Protocol qubit_flip(double gap = 1.0) {
  const auto h = HermitianOperator::diagonal({0.0, gap});
  return Protocol::with_unitary(h, h, UnitaryOperator(pauli_x()));
}

/// H0 = diag(0, gap), Htau = H0 + shift * I, sudden quench.
inline Protocol uniform_shift(double gap = 1.0, double shift = 0.5) {
  const auto h0 = HermitianOperator::diagonal({0.0, gap});
  return Protocol::quench(h0, h0.shifted(shift));
}

/// Driven qubit H(t) = diag(0, omega(t)) + g(t) sigma_x with omega ramped
/// linearly from omega0 to omega1 and g(t) = coupling * sin(pi t / T), so the
/// drive vanishes at both endpoints. Midpoint-sampled piecewise-constant
/// segments.
inline Protocol qubit_drive(double omega0 = 1.0, double omega1 = 2.0, double coupling = 0.8, double duration = 3.0,
                            std::size_t steps = 40) {
  if (steps < 1) throw ValidationError("qubit_drive: steps must be >= 1");
  if (!(duration > 0.0)) throw ValidationError("qubit_drive: duration must be positive");
  const double dt = duration / static_cast<double>(steps);
  PiecewiseDrive drive;
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = (static_cast<double>(k) + 0.5) * dt;
    const double omega = omega0 + (omega1 - omega0) * t / duration;
    const double g = coupling * std::sin(std::numbers::pi * t / duration);
    Matrix h(2, 2);
    h << 0.0, g, g, omega;
    drive.segments.push_back({HermitianOperator(h), dt});
  }
  return Protocol(HermitianOperator::diagonal({0.0, omega0}), HermitianOperator::diagonal({0.0, omega1}),
                  std::move(drive));
}

/// Open-boundary transverse-field Ising chain -J sum Z_i Z_{i+1} - h sum X_i.
inline HermitianOperator ising_hamiltonian(std::size_t n, double coupling, double field) {
  if (n < 1) throw ValidationError("ising_hamiltonian: need at least one spin");
  const auto dim = static_cast<Eigen::Index>(1) << n;
  Matrix h = Matrix::Zero(dim, dim);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    h -= coupling * site_operator(pauli_z(), i, n) * site_operator(pauli_z(), i + 1, n);
  }
  for (std::size_t i = 0; i < n; ++i) h -= field * site_operator(pauli_x(), i, n);
  return HermitianOperator(h);
}

/// Field quench h0 -> h1. steps == 0 gives a sudden quench; otherwise the
/// field is ramped linearly over `duration` in midpoint-sampled segments.
inline Protocol ising_quench(std::size_t n = 4, double coupling = 1.0, double h0 = 1.0, double h1 = 0.5,
                             double duration = 0.0, std::size_t steps = 0) {
  auto start = ising_hamiltonian(n, coupling, h0);
  auto stop = ising_hamiltonian(n, coupling, h1);
  if (steps == 0) return Protocol::quench(std::move(start), std::move(stop));
  if (!(duration > 0.0)) throw ValidationError("ising_quench: ramp duration must be positive");
  const double dt = duration / static_cast<double>(steps);
  PiecewiseDrive drive;
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = (static_cast<double>(k) + 0.5) * dt;
    drive.segments.push_back({ising_hamiltonian(n, coupling, h0 + (h1 - h0) * t / duration), dt});
  }
  return Protocol(std::move(start), std::move(stop), std::move(drive));
}

// Random generators. std::normal_distribution is not specified bit-for-bit
// across standard libraries, so these are for tests, not for reports.

inline Matrix random_ginibre(std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  const auto n = static_cast<Eigen::Index>(dim);
  Matrix m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = Complex(g(rng), g(rng));
  }
  return m;
}

/// Haar-distributed unitary (QR of a Ginibre matrix with phase fix).
inline UnitaryOperator random_unitary(std::size_t dim, std::mt19937_64& rng) {
  Eigen::HouseholderQR<Matrix> qr(random_ginibre(dim, rng));
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR();
  for (Eigen::Index j = 0; j < q.cols(); ++j) {
    const Complex d = r(j, j);
    if (std::abs(d) > 0.0) q.col(j) *= d / std::abs(d);
  }
  return UnitaryOperator(q);
}

inline HermitianOperator random_hermitian(std::size_t dim, std::mt19937_64& rng) {
  const Matrix g = random_ginibre(dim, rng);
  return HermitianOperator(Matrix(0.5 * (g + g.adjoint())));
}

/// Full-rank random state ~ G G^dagger / Tr, mixed with a little identity.
inline DensityMatrix random_density(std::size_t dim, std::mt19937_64& rng, double floor = 1e-3) {
  const Matrix g = random_ginibre(dim, rng);
  Matrix rho = g * g.adjoint();
  rho /= rho.trace().real();
  const auto n = static_cast<Eigen::Index>(dim);
  rho = (1.0 - floor) * rho + floor * Matrix::Identity(n, n) / static_cast<double>(dim);
  return DensityMatrix(Matrix(0.5 * (rho + rho.adjoint())));
}

/// Diagonal state with random populations.
inline DensityMatrix random_diagonal_density(std::size_t dim, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::vector<double> p(dim);
  double total = 0.0;
  for (auto& x : p) total += (x = u(rng));
  for (auto& x : p) x /= total;
  return DensityMatrix::from_populations(p);
}

/// Protocol whose endpoint Hamiltonians have integer spectra in
/// [0, max_level] in randomly rotated eigenbases, driven by a Haar unitary.
/// Every gap is an integer, so it lifts to a battery with delta = 1.
inline Protocol random_commensurate(std::size_t dim, std::mt19937_64& rng, int max_level = 3) {
  std::uniform_int_distribution<int> level(0, max_level);
  auto rotated = [&] {
    std::vector<double> e(dim);
    for (auto& x : e) x = level(rng);
    const Matrix r = random_unitary(dim, rng).matrix();
    const Matrix d = HermitianOperator::diagonal(e).matrix();
    return HermitianOperator(Matrix(r * d * r.adjoint()), 1e-10);
  };
  auto h0 = rotated();
  auto htau = rotated();
  return Protocol::with_unitary(std::move(h0), std::move(htau), random_unitary(dim, rng));
}

/// Random Hamiltonians and unitary without commensurability.
inline Protocol random_protocol(std::size_t dim, std::mt19937_64& rng) {
  return Protocol::with_unitary(random_hermitian(dim, rng), random_hermitian(dim, rng), random_unitary(dim, rng));
}

}  // namespace qwork::models
