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

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qwork/errors.hpp"

namespace qwork {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using RealVector = Eigen::VectorXd;

namespace tol {
inline constexpr double kHermitian = 1e-12;
inline constexpr double kTrace = 1e-10;
inline constexpr double kPositivity = 1e-12;
inline constexpr double kUnitary = 1e-10;
/// Eigenvalues at or below this are exact zeros for support computations.
inline constexpr double kZeroEigenvalue = 1e-14;
}  // namespace tol

/// Largest absolute entry.
inline double max_abs(const Matrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

/// Trace over the second factor of a (dim_a * dim_b)-dimensional operator.
inline Matrix partial_trace_second(const Matrix& m, Eigen::Index dim_a, Eigen::Index dim_b) {
  if (m.rows() != dim_a * dim_b || m.cols() != dim_a * dim_b) {
    throw ValidationError("partial_trace_second: dimension mismatch");
  }
  Matrix out = Matrix::Zero(dim_a, dim_a);
  for (Eigen::Index i = 0; i < dim_a; ++i) {
    for (Eigen::Index j = 0; j < dim_a; ++j) {
      out(i, j) = m.block(i * dim_b, j * dim_b, dim_b, dim_b).trace();
    }
  }
  return out;
}

/// Trace over the first factor.
inline Matrix partial_trace_first(const Matrix& m, Eigen::Index dim_a, Eigen::Index dim_b) {
  if (m.rows() != dim_a * dim_b || m.cols() != dim_a * dim_b) {
    throw ValidationError("partial_trace_first: dimension mismatch");
  }
  Matrix out = Matrix::Zero(dim_b, dim_b);
  for (Eigen::Index i = 0; i < dim_a; ++i) {
    out += m.block(i * dim_b, i * dim_b, dim_b, dim_b);
  }
  return out;
}

/// Eigenvalues grouped into (possibly degenerate) eigenspaces, ascending.
struct SpectralDecomposition {
  std::vector<double> eigenvalues;
  std::vector<Matrix> projectors;
  double grouping_tol = 0.0;
  // Full eigenbasis underneath the grouping; columns of `eigenvectors` pair
  // with `raw_eigenvalues`.
  RealVector raw_eigenvalues;
  Matrix eigenvectors;

  std::size_t size() const { return eigenvalues.size(); }

  Matrix reconstruct() const {
    const auto n = eigenvectors.rows();
    Matrix out = Matrix::Zero(n, n);
    for (std::size_t k = 0; k < eigenvalues.size(); ++k) {
      out += eigenvalues[k] * projectors[k];
    }
    return out;
  }
};

inline double default_grouping_tol(const RealVector& eigenvalues) {
  const double radius = eigenvalues.size() == 0 ? 0.0 : eigenvalues.cwiseAbs().maxCoeff();
  return 1e-10 * (radius + 1.0);
}

namespace detail {

inline SpectralDecomposition decompose(const Matrix& m, std::optional<double> grouping_tol) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m);
  if (solver.info() != Eigen::Success) {
    throw DomainError("spectral: eigensolver did not converge");
  }
  SpectralDecomposition out;
  out.raw_eigenvalues = solver.eigenvalues();
  out.eigenvectors = solver.eigenvectors();
  out.grouping_tol = grouping_tol.value_or(default_grouping_tol(out.raw_eigenvalues));

  const auto n = out.raw_eigenvalues.size();
  Eigen::Index start = 0;
  while (start < n) {
    Eigen::Index stop = start + 1;
    while (stop < n &&
           out.raw_eigenvalues(stop) - out.raw_eigenvalues(stop - 1) <= out.grouping_tol) {
      ++stop;
    }
    const auto block = out.eigenvectors.middleCols(start, stop - start);
    out.eigenvalues.push_back(out.raw_eigenvalues.segment(start, stop - start).mean());
    out.projectors.push_back(block * block.adjoint());
    start = stop;
  }
  return out;
}

struct SpectralCache {
  std::once_flag once;
  std::optional<SpectralDecomposition> value;
};

}  // namespace detail

/// Dense complex self-adjoint matrix. Entries are symmetrized on construction
/// so downstream spectral calculus sees an exactly Hermitian operand.
class HermitianOperator {
 public:
  explicit HermitianOperator(const Matrix& entries, double tolerance = tol::kHermitian)
      : cache_(std::make_shared<detail::SpectralCache>()) {
    if (entries.rows() == 0 || entries.rows() != entries.cols()) {
      throw ValidationError("HermitianOperator: matrix must be square with dim >= 1, got " +
                            std::to_string(entries.rows()) + "x" + std::to_string(entries.cols()));
    }
    if (!entries.allFinite()) {
      throw ValidationError("HermitianOperator: non-finite entry");
    }
    const double asym = max_abs(entries - entries.adjoint());
    if (asym > tolerance) {
      throw ValidationError("HermitianOperator: not Hermitian, max |A - A^dagger| entry = " +
                            std::to_string(asym));
    }
    m_ = 0.5 * (entries + entries.adjoint());
  }

  static HermitianOperator diagonal(std::span<const double> values) {
    RealVector v(static_cast<Eigen::Index>(values.size()));
    for (std::size_t i = 0; i < values.size(); ++i) v(static_cast<Eigen::Index>(i)) = values[i];
    return HermitianOperator(Matrix(v.cast<Complex>().asDiagonal()));
  }
  static HermitianOperator diagonal(std::initializer_list<double> values) {
    return diagonal(std::span<const double>(values.begin(), values.size()));
  }
  static HermitianOperator zero(std::size_t dim) {
    const auto n = static_cast<Eigen::Index>(dim);
    return HermitianOperator(Matrix::Zero(n, n));
  }
  static HermitianOperator identity(std::size_t dim) {
    const auto n = static_cast<Eigen::Index>(dim);
    return HermitianOperator(Matrix::Identity(n, n));
  }

  std::size_t dim() const { return static_cast<std::size_t>(m_.rows()); }
  const Matrix& matrix() const { return m_; }

  /// Decomposition with the default grouping tolerance, computed once.
  const SpectralDecomposition& spectral() const {
    std::call_once(cache_->once, [this] { cache_->value = detail::decompose(m_, std::nullopt); });
    return *cache_->value;
  }

  const RealVector& eigenvalues() const { return spectral().raw_eigenvalues; }

  HermitianOperator shifted(double c) const {
    return HermitianOperator(m_ + c * Matrix::Identity(m_.rows(), m_.cols()));
  }

  friend HermitianOperator operator+(const HermitianOperator& a, const HermitianOperator& b) {
    if (a.dim() != b.dim()) throw ValidationError("HermitianOperator +: dimension mismatch");
    return HermitianOperator(a.m_ + b.m_);
  }
  friend HermitianOperator operator*(double s, const HermitianOperator& a) {
    return HermitianOperator(s * a.m_);
  }

 private:
  Matrix m_;
  std::shared_ptr<detail::SpectralCache> cache_;
};

inline SpectralDecomposition spectral(const HermitianOperator& h, double grouping_tol) {
  if (!(grouping_tol >= 0.0)) throw ValidationError("spectral: grouping_tol must be >= 0");
  return detail::decompose(h.matrix(), grouping_tol);
}

inline const SpectralDecomposition& spectral(const HermitianOperator& h) { return h.spectral(); }

/// f(H) through the eigenbasis. Throws DomainError if f produces a non-finite
/// value at any eigenvalue.
inline HermitianOperator apply_function(const HermitianOperator& h,
                                        const std::function<double(double)>& f) {
  const auto& sd = h.spectral();
  RealVector fv(sd.raw_eigenvalues.size());
  for (Eigen::Index i = 0; i < fv.size(); ++i) {
    const double x = sd.raw_eigenvalues(i);
    const double y = f(x);
    if (!std::isfinite(y)) {
      throw DomainError("apply_function: function undefined at eigenvalue " + std::to_string(x));
    }
    fv(i) = y;
  }
  return HermitianOperator(sd.eigenvectors * fv.cast<Complex>().asDiagonal() *
                           sd.eigenvectors.adjoint());
}

/// H^p for positive semidefinite H. Eigenvalues within the zero tolerance are
/// treated as 0; 0^p with p < 0 is a domain error, 0^0 is taken as 0 (support
/// projector convention).
inline HermitianOperator psd_power(const HermitianOperator& h, double p) {
  return apply_function(h, [p](double x) {
    if (x < -tol::kPositivity) {
      throw DomainError("psd_power: negative eigenvalue " + std::to_string(x));
    }
    if (x <= tol::kZeroEigenvalue) {
      if (p < 0.0) throw DomainError("psd_power: negative power of a singular operator");
      return 0.0;
    }
    return std::pow(x, p);
  });
}

inline HermitianOperator exp(const HermitianOperator& h, double scale = 1.0) {
  return apply_function(h, [scale](double x) { return std::exp(scale * x); });
}

inline HermitianOperator log(const HermitianOperator& h) {
  return apply_function(h, [](double x) {
    if (x <= 0.0) throw DomainError("log: non-positive eigenvalue " + std::to_string(x));
    return std::log(x);
  });
}

inline Matrix commutator(const Matrix& a, const Matrix& b) { return a * b - b * a; }

/// Positive semidefinite, unit-trace Hermitian operator.
class DensityMatrix {
 public:
  explicit DensityMatrix(const Matrix& entries) : op_(entries) { validate(); }
  explicit DensityMatrix(HermitianOperator op) : op_(std::move(op)) { validate(); }

  static DensityMatrix from_populations(std::span<const double> p) {
    return DensityMatrix(HermitianOperator::diagonal(p));
  }
  static DensityMatrix from_populations(std::initializer_list<double> p) {
    return from_populations(std::span<const double>(p.begin(), p.size()));
  }
  static DensityMatrix pure(const Eigen::VectorXcd& psi) {
    const Eigen::VectorXcd v = psi / psi.norm();
    return DensityMatrix(Matrix(v * v.adjoint()));
  }
  static DensityMatrix basis_state(std::size_t dim, std::size_t k) {
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(dim));
    v(static_cast<Eigen::Index>(k)) = 1.0;
    return pure(v);
  }
  static DensityMatrix maximally_mixed(std::size_t dim) {
    const auto n = static_cast<Eigen::Index>(dim);
    return DensityMatrix(Matrix(Matrix::Identity(n, n) / static_cast<double>(dim)));
  }

  std::size_t dim() const { return op_.dim(); }
  const Matrix& matrix() const { return op_.matrix(); }
  const HermitianOperator& op() const { return op_; }
  operator const HermitianOperator&() const { return op_; }

  double purity() const { return (op_.matrix() * op_.matrix()).trace().real(); }

 private:
  void validate() const {
    const double tr = op_.matrix().trace().real();
    if (std::abs(tr - 1.0) > tol::kTrace) {
      throw ValidationError("DensityMatrix: trace " + std::to_string(tr) + " != 1");
    }
    const double min_eig = op_.eigenvalues().minCoeff();
    if (min_eig < -tol::kPositivity) {
      throw ValidationError("DensityMatrix: negative eigenvalue " + std::to_string(min_eig));
    }
  }

  HermitianOperator op_;
};

struct GibbsState {
  DensityMatrix state;
  double Z;
  double log_Z;
  double F;
};

/// e^{-beta H} / Z with Z = Tr e^{-beta H}, F = -ln(Z) / beta. The exponent is
/// shifted by the ground energy so large beta*E does not overflow.
inline GibbsState gibbs(const HermitianOperator& h, double beta) {
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw ValidationError("gibbs: beta must be positive and finite, got " + std::to_string(beta));
  }
  const auto& sd = h.spectral();
  const double e_min = sd.raw_eigenvalues.minCoeff();
  RealVector w = (-beta * (sd.raw_eigenvalues.array() - e_min)).exp().matrix();
  const double sum = w.sum();
  const double log_z = -beta * e_min + std::log(sum);
  Matrix rho = sd.eigenvectors * (w / sum).cast<Complex>().asDiagonal() * sd.eigenvectors.adjoint();
  return GibbsState{DensityMatrix(rho), std::exp(log_z), log_z, -log_z / beta};
}

struct ThermoPotentials {
  double beta;
  double Z0;
  double Ztau;
  double F0;
  double Ftau;
  double deltaF;
  double log_Z0;
  double log_Ztau;
};

inline ThermoPotentials thermo_potentials(const HermitianOperator& h0,
                                          const HermitianOperator& htau, double beta) {
  const auto g0 = gibbs(h0, beta);
  const auto gt = gibbs(htau, beta);
  return ThermoPotentials{beta, g0.Z, gt.Z, g0.F, gt.F, gt.F - g0.F, g0.log_Z, gt.log_Z};
}

}  // namespace qwork
