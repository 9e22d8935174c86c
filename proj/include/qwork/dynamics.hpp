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

#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "qwork/operators.hpp"

namespace qwork {

class UnitaryOperator {
 public:
  explicit UnitaryOperator(Matrix entries, double tolerance = tol::kUnitary) : u_(std::move(entries)) {
    if (u_.rows() == 0 || u_.rows() != u_.cols()) {
      throw ValidationError("UnitaryOperator: matrix must be square with dim >= 1");
    }
    const double err = unitarity_residual(u_);
    if (err > tolerance) {
      throw ValidationError("UnitaryOperator: max |U^dagger U - I| entry = " + std::to_string(err));
    }
  }

  static UnitaryOperator identity(std::size_t dim) {
    const auto n = static_cast<Eigen::Index>(dim);
    return UnitaryOperator(Matrix::Identity(n, n));
  }

  static double unitarity_residual(const Matrix& u) {
    return max_abs(u.adjoint() * u - Matrix::Identity(u.rows(), u.cols()));
  }

  std::size_t dim() const { return static_cast<std::size_t>(u_.rows()); }
  const Matrix& matrix() const { return u_; }
  UnitaryOperator adjoint() const { return UnitaryOperator(u_.adjoint()); }

  friend UnitaryOperator operator*(const UnitaryOperator& a, const UnitaryOperator& b) {
    if (a.dim() != b.dim()) throw ValidationError("UnitaryOperator *: dimension mismatch");
    return UnitaryOperator(a.u_ * b.u_);
  }

 private:
  Matrix u_;
};

/// exp(-i H dt) through the eigenbasis of H.
inline UnitaryOperator propagator(const HermitianOperator& h, double dt) {
  const auto& sd = h.spectral();
  Eigen::VectorXcd phases(sd.raw_eigenvalues.size());
  for (Eigen::Index i = 0; i < phases.size(); ++i) {
    phases(i) = std::polar(1.0, -sd.raw_eigenvalues(i) * dt);
  }
  return UnitaryOperator(Matrix(sd.eigenvectors * phases.asDiagonal() * sd.eigenvectors.adjoint()));
}

struct ExplicitUnitary {
  UnitaryOperator u;
};

struct Segment {
  HermitianOperator h;
  double dt;
};

/// Piecewise-constant Hamiltonian; segments are applied in order.
struct PiecewiseDrive {
  std::vector<Segment> segments;
};

struct SuddenQuench {};

using Drive = std::variant<ExplicitUnitary, PiecewiseDrive, SuddenQuench>;

/// Endpoint Hamiltonians plus a rule producing the evolution unitary.
class Protocol {
 public:
  Protocol(HermitianOperator h0, HermitianOperator htau, Drive drive)
      : h0_(std::move(h0)), htau_(std::move(htau)), drive_(std::move(drive)) {
    if (h0_.dim() != htau_.dim()) {
      throw ValidationError("Protocol: H0 and Htau dimensions differ (" + std::to_string(h0_.dim()) +
                            " vs " + std::to_string(htau_.dim()) + ")");
    }
    const std::size_t n = h0_.dim();
    if (const auto* e = std::get_if<ExplicitUnitary>(&drive_)) {
      if (e->u.dim() != n) throw ValidationError("Protocol: unitary dimension mismatch");
    } else if (const auto* p = std::get_if<PiecewiseDrive>(&drive_)) {
      if (p->segments.empty()) throw ValidationError("Protocol: piecewise drive has no segments");
      for (const auto& s : p->segments) {
        if (s.h.dim() != n) throw ValidationError("Protocol: segment dimension mismatch");
        if (!std::isfinite(s.dt)) throw ValidationError("Protocol: non-finite segment duration");
      }
    }
  }

  static Protocol quench(HermitianOperator h0, HermitianOperator htau) {
    return Protocol(std::move(h0), std::move(htau), SuddenQuench{});
  }
  static Protocol with_unitary(HermitianOperator h0, HermitianOperator htau, UnitaryOperator u) {
    return Protocol(std::move(h0), std::move(htau), ExplicitUnitary{std::move(u)});
  }

  const HermitianOperator& h0() const { return h0_; }
  const HermitianOperator& htau() const { return htau_; }
  const Drive& drive() const { return drive_; }
  std::size_t dim() const { return h0_.dim(); }

 private:
  HermitianOperator h0_;
  HermitianOperator htau_;
  Drive drive_;
};

inline UnitaryOperator build_unitary(const Protocol& p) {
  struct Visitor {
    std::size_t dim;
    UnitaryOperator operator()(const ExplicitUnitary& e) const { return e.u; }
    UnitaryOperator operator()(const SuddenQuench&) const { return UnitaryOperator::identity(dim); }
    UnitaryOperator operator()(const PiecewiseDrive& d) const {
      Matrix u = Matrix::Identity(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
      for (const auto& s : d.segments) u = propagator(s.h, s.dt).matrix() * u;
      return UnitaryOperator(std::move(u));
    }
  };
  return std::visit(Visitor{p.dim()}, p.drive());
}

inline DensityMatrix evolve(const DensityMatrix& rho, const UnitaryOperator& u) {
  if (rho.dim() != u.dim()) {
    throw ValidationError("evolve: state dim " + std::to_string(rho.dim()) + " vs unitary dim " +
                          std::to_string(u.dim()));
  }
  return DensityMatrix(Matrix(u.matrix() * rho.matrix() * u.matrix().adjoint()));
}

}  // namespace qwork
