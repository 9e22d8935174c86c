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
#include <limits>
#include <string>

#include "qwork/operators.hpp"

namespace qwork {

inline constexpr double kInfiniteDivergence = std::numeric_limits<double>::infinity();

inline bool is_infinite_divergence(double d) { return d == kInfiniteDivergence; }

/// Renyi order on the extended half-line [0, +inf].
class Alpha {
 public:
  Alpha(double value) : value_(value) {  // NOLINT(google-explicit-constructor)
    if (std::isnan(value) || value < 0.0) {
      throw ValidationError("Alpha: order must be in [0, +inf], got " + std::to_string(value));
    }
  }
  static Alpha infinity() { return Alpha(std::numeric_limits<double>::infinity()); }
  static Alpha one() { return Alpha(1.0); }

  double value() const { return value_; }
  bool is_infinite() const { return std::isinf(value_); }
  bool is_one() const { return value_ == 1.0; }
  bool is_zero() const { return value_ == 0.0; }

  std::string to_string() const {
    if (is_infinite()) return "inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", value_);
    return buf;
  }

 private:
  double value_;
};

namespace detail {

/// Eigenpairs of a positive semidefinite operand with tiny eigenvalues
/// snapped to exact zeros.
struct PsdSpectrum {
  RealVector values;
  const Matrix* vectors;

  bool in_support(Eigen::Index i) const { return values(i) > 0.0; }
  bool full_rank() const { return (values.array() > 0.0).all(); }
};

inline PsdSpectrum psd_spectrum(const HermitianOperator& op, const char* who) {
  const auto& sd = op.spectral();
  PsdSpectrum s{sd.raw_eigenvalues, &sd.eigenvectors};
  const double scale = std::max(1.0, s.values.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < s.values.size(); ++i) {
    if (s.values(i) < -1e-10 * scale) {
      throw ValidationError(std::string(who) + ": operand is not positive semidefinite (eigenvalue " +
                            std::to_string(s.values(i)) + ")");
    }
    if (s.values(i) <= tol::kZeroEigenvalue) s.values(i) = 0.0;
  }
  return s;
}

/// |<rho_i|sigma_j>|^2.
inline Eigen::MatrixXd overlaps(const PsdSpectrum& rho, const PsdSpectrum& sigma) {
  return ((*rho.vectors).adjoint() * (*sigma.vectors)).cwiseAbs2();
}

/// Weight of supp(rho) outside supp(sigma).
inline double support_leak(const PsdSpectrum& rho, const PsdSpectrum& sigma, const Eigen::MatrixXd& ov) {
  double leak = 0.0;
  for (Eigen::Index i = 0; i < ov.rows(); ++i) {
    if (!rho.in_support(i)) continue;
    for (Eigen::Index j = 0; j < ov.cols(); ++j) {
      if (!sigma.in_support(j)) leak += ov(i, j);
    }
  }
  return leak;
}

inline constexpr double kSupportLeakTol = 1e-10;

inline void check_dims(const HermitianOperator& a, const HermitianOperator& b, const char* who) {
  if (a.dim() != b.dim()) {
    throw ValidationError(std::string(who) + ": dimension mismatch (" + std::to_string(a.dim()) +
                          " vs " + std::to_string(b.dim()) + ")");
  }
}

}  // namespace detail

/// ln Tr[rho^a sigma^{1-a}] for any real order a, with x^0 on a zero
/// eigenvalue read as 0 (support projector). Negative a requires full-rank
/// rho; returns +inf when a > 1 and supp(rho) leaks outside supp(sigma), and
/// -inf when the trace vanishes.
inline double petz_log_quasi(const HermitianOperator& rho, const HermitianOperator& sigma, double a) {
  detail::check_dims(rho, sigma, "petz_log_quasi");
  const auto r = detail::psd_spectrum(rho, "petz_log_quasi");
  const auto s = detail::psd_spectrum(sigma, "petz_log_quasi");
  if (a < 0.0 && !r.full_rank()) {
    throw DomainError("petz_log_quasi: negative order requires a full-rank first argument");
  }
  const double b = 1.0 - a;
  const auto ov = detail::overlaps(r, s);
  if (b < 0.0 && detail::support_leak(r, s, ov) > detail::kSupportLeakTol) {
    return std::numeric_limits<double>::infinity();
  }
  double q = 0.0;
  for (Eigen::Index i = 0; i < ov.rows(); ++i) {
    if (!r.in_support(i)) continue;
    const double ri = std::pow(r.values(i), a);
    for (Eigen::Index j = 0; j < ov.cols(); ++j) {
      if (!s.in_support(j)) continue;
      q += ri * std::pow(s.values(j), b) * ov(i, j);
    }
  }
  if (q <= 0.0) return -std::numeric_limits<double>::infinity();
  return std::log(q);
}

/// (a - 1)^{-1} ln Tr[rho^a sigma^{1-a}] for any real a != 1. Orders below 0
/// lie outside the usual Renyi range but appear in the CGF identity for
/// eta > beta; they need full-rank rho.
inline double renyi_extended(const HermitianOperator& rho, const HermitianOperator& sigma, double a) {
  if (a == 1.0) throw ValidationError("renyi_extended: order 1 is the relative entropy limit");
  const double lq = petz_log_quasi(rho, sigma, a);
  if (std::isinf(lq)) return kInfiniteDivergence;
  return lq / (a - 1.0);
}

/// Tr[rho (ln rho - ln sigma)].
inline double relative_entropy(const HermitianOperator& rho, const HermitianOperator& sigma) {
  detail::check_dims(rho, sigma, "relative_entropy");
  const auto r = detail::psd_spectrum(rho, "relative_entropy");
  const auto s = detail::psd_spectrum(sigma, "relative_entropy");
  const auto ov = detail::overlaps(r, s);
  if (detail::support_leak(r, s, ov) > detail::kSupportLeakTol) return kInfiniteDivergence;
  double d = 0.0;
  for (Eigen::Index i = 0; i < ov.rows(); ++i) {
    if (!r.in_support(i)) continue;
    const double p = r.values(i);
    double cross = 0.0;
    for (Eigen::Index j = 0; j < ov.cols(); ++j) {
      if (s.in_support(j)) cross += ov(i, j) * std::log(s.values(j));
    }
    d += p * (std::log(p) - cross);
  }
  return d;
}

/// Tr[rho (ln rho - ln sigma)^2] - D(rho||sigma)^2, evaluated as
/// || rho^{1/2} ln rho - ln sigma rho^{1/2} ||_F^2 - D^2 so that kernels of
/// rho never meet a logarithm.
inline double relative_entropy_variance(const HermitianOperator& rho, const HermitianOperator& sigma) {
  detail::check_dims(rho, sigma, "relative_entropy_variance");
  const auto r = detail::psd_spectrum(rho, "relative_entropy_variance");
  const auto s = detail::psd_spectrum(sigma, "relative_entropy_variance");
  const auto ov = detail::overlaps(r, s);
  if (detail::support_leak(r, s, ov) > detail::kSupportLeakTol) return kInfiniteDivergence;

  const auto n = r.values.size();
  RealVector sqrt_p(n), sqrt_p_log_p(n), log_q(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double p = r.values(i);
    sqrt_p(i) = std::sqrt(p);
    sqrt_p_log_p(i) = p > 0.0 ? std::sqrt(p) * std::log(p) : 0.0;
    const double q = s.values(i);
    log_q(i) = q > 0.0 ? std::log(q) : 0.0;
  }
  const Matrix& vr = *r.vectors;
  const Matrix& vs = *s.vectors;
  const Matrix a = vr * sqrt_p_log_p.cast<Complex>().asDiagonal() * vr.adjoint() -
                   vs * log_q.cast<Complex>().asDiagonal() * vs.adjoint() * vr *
                       sqrt_p.cast<Complex>().asDiagonal() * vr.adjoint();
  const double second = a.squaredNorm();
  const double d = relative_entropy(rho, sigma);
  return second - d * d;
}

/// ln || sigma^{-1/2} rho sigma^{-1/2} ||_op on supp(sigma).
inline double max_relative_entropy(const HermitianOperator& rho, const HermitianOperator& sigma) {
  detail::check_dims(rho, sigma, "max_relative_entropy");
  const auto r = detail::psd_spectrum(rho, "max_relative_entropy");
  const auto s = detail::psd_spectrum(sigma, "max_relative_entropy");
  const auto ov = detail::overlaps(r, s);
  if (detail::support_leak(r, s, ov) > detail::kSupportLeakTol) return kInfiniteDivergence;

  std::vector<Eigen::Index> keep;
  for (Eigen::Index j = 0; j < s.values.size(); ++j) {
    if (s.in_support(j)) keep.push_back(j);
  }
  const auto k = static_cast<Eigen::Index>(keep.size());
  Matrix basis(s.values.size(), k);
  for (Eigen::Index c = 0; c < k; ++c) {
    basis.col(c) = (*s.vectors).col(keep[c]) / std::sqrt(s.values(keep[c]));
  }
  const Matrix m = basis.adjoint() * rho.matrix() * basis;
  Eigen::SelfAdjointEigenSolver<Matrix> solver(0.5 * (m + m.adjoint()), Eigen::EigenvaluesOnly);
  const double top = solver.eigenvalues().maxCoeff();
  if (top <= 0.0) return -std::numeric_limits<double>::infinity();
  return std::log(top);
}

/// Petz Renyi divergence of order alpha. alpha = 0 is the support-overlap
/// limit -ln Tr[Pi_rho sigma], alpha = 1 the relative entropy and
/// alpha = inf the max-relative entropy. Support violations return
/// kInfiniteDivergence rather than throwing.
inline double renyi(const HermitianOperator& rho, const HermitianOperator& sigma, Alpha alpha) {
  detail::check_dims(rho, sigma, "renyi");
  if (alpha.is_one()) return relative_entropy(rho, sigma);
  if (alpha.is_infinite()) return max_relative_entropy(rho, sigma);
  const double a = alpha.value();
  return renyi_extended(rho, sigma, a);
}

/// Central difference of S_alpha around alpha = 1, optionally Richardson
/// extrapolated with the half step.
inline double renyi_alpha_derivative(const HermitianOperator& rho, const HermitianOperator& sigma,
                                     double h = 1e-4, bool richardson = false) {
  if (!(h >= 1e-6 && h <= 1e-2)) {
    throw ValidationError("renyi_alpha_derivative: step must be in [1e-6, 1e-2], got " + std::to_string(h));
  }
  auto central = [&](double step) {
    return (renyi(rho, sigma, 1.0 + step) - renyi(rho, sigma, 1.0 - step)) / (2.0 * step);
  };
  const double full = central(h);
  if (!richardson) return full;
  return (4.0 * central(0.5 * h) - full) / 3.0;
}

/// |S_alpha(rho||sigma) - alpha/(1-alpha) S_{1-alpha}(sigma||rho)| for
/// full-rank operands.
inline double skew_symmetry_check(const HermitianOperator& rho, const HermitianOperator& sigma, double alpha) {
  detail::check_dims(rho, sigma, "skew_symmetry_check");
  if (!(alpha > 0.0) || alpha == 1.0 || !std::isfinite(alpha)) {
    throw ValidationError("skew_symmetry_check: alpha must lie in (0,1) or (1,inf)");
  }
  if (!detail::psd_spectrum(rho, "skew_symmetry_check").full_rank() ||
      !detail::psd_spectrum(sigma, "skew_symmetry_check").full_rank()) {
    throw PreconditionError("skew_symmetry_check: both operands must be full rank");
  }
  const double lhs = renyi(rho, sigma, alpha);
  const double rhs = alpha / (1.0 - alpha) * renyi_extended(sigma, rho, 1.0 - alpha);
  return std::abs(lhs - rhs);
}

}  // namespace qwork
