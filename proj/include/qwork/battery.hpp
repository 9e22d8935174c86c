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
#include <cstdlib>
#include <string>
#include <utility>
#include <vector>

#include "qwork/divergences.hpp"
#include "qwork/dynamics.hpp"
#include "qwork/operators.hpp"
#include "qwork/workstats.hpp"

namespace qwork {

/// Uniform energy ladder H_B = diag(j * delta), j = 0 .. dim-1, with cyclic
/// rung shifts standing in for battery displacements. Shifts wrap, so
/// energy bookkeeping is only exact away from the ladder ends.
class BatteryLadder {
 public:
  BatteryLadder(std::size_t dim, double delta) : dim_(dim), delta_(delta) {
    if (dim < 1) throw ValidationError("BatteryLadder: dim_B must be >= 1");
    if (!(delta > 0.0) || !std::isfinite(delta)) throw ValidationError("BatteryLadder: delta must be positive");
  }

  std::size_t dim() const { return dim_; }
  double delta() const { return delta_; }
  double energy(std::size_t rung) const { return static_cast<double>(rung) * delta_; }

  HermitianOperator hamiltonian() const {
    std::vector<double> e(dim_);
    for (std::size_t j = 0; j < dim_; ++j) e[j] = energy(j);
    return HermitianOperator::diagonal(e);
  }

  /// |j + s mod dim><j|.
  Matrix shift(long s) const {
    const auto n = static_cast<long>(dim_);
    Matrix m = Matrix::Zero(n, n);
    for (long j = 0; j < n; ++j) m(((j + s) % n + n) % n, j) = 1.0;
    return m;
  }

  /// Projector onto rungs [lo, hi).
  Matrix rung_projector(std::size_t lo, std::size_t hi) const {
    const auto n = static_cast<Eigen::Index>(dim_);
    Matrix p = Matrix::Zero(n, n);
    for (std::size_t j = lo; j < hi && j < dim_; ++j) p(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j)) = 1.0;
    return p;
  }

 private:
  std::size_t dim_;
  double delta_;
};

/// Two-level control register; index 0 holds lambda_0, index 1 lambda_tau.
struct SwitchModel {
  static constexpr Eigen::Index kInitial = 0;
  static constexpr Eigen::Index kFinal = 1;

  static Matrix projector(Eigen::Index label) {
    Matrix p = Matrix::Zero(2, 2);
    p(label, label) = 1.0;
    return p;
  }
  /// |to><from|.
  static Matrix transition(Eigen::Index to, Eigen::Index from) {
    Matrix t = Matrix::Zero(2, 2);
    t(to, from) = 1.0;
    return t;
  }
};

/// H_S(0) (x) Pi_0 + H_S(tau) (x) Pi_tau + H_B, ordered system (x) battery (x) switch.
inline HermitianOperator build_total_hamiltonian(const HermitianOperator& h0, const HermitianOperator& htau,
                                                 const BatteryLadder& ladder, const SwitchModel& = {}) {
  if (h0.dim() != htau.dim()) throw ValidationError("build_total_hamiltonian: H0 and Htau dimensions differ");
  const auto ds = static_cast<Eigen::Index>(h0.dim());
  const auto db = static_cast<Eigen::Index>(ladder.dim());
  const Matrix ib = Matrix::Identity(db, db);
  const Matrix is = Matrix::Identity(ds, ds);
  const Matrix ic = Matrix::Identity(2, 2);
  const Matrix total = kron(kron(h0.matrix(), ib), SwitchModel::projector(SwitchModel::kInitial)) +
                       kron(kron(htau.matrix(), ib), SwitchModel::projector(SwitchModel::kFinal)) +
                       kron(kron(is, ladder.hamiltonian().matrix()), ic);
  return HermitianOperator(total);
}

/// System-battery unitary sum_{a,b} Pi_a(tau) U Pi_b(0) (x) shift(s_ab) with
/// s_ab = (E_b(0) - E_a(tau)) / delta: every system transition is paid for by
/// an exact battery displacement.
class ConditionalShiftUnitary {
 public:
  ConditionalShiftUnitary(UnitaryOperator u_sb, std::vector<std::vector<long>> shifts, HermitianOperator h0,
                          HermitianOperator htau, BatteryLadder ladder)
      : u_sb_(std::move(u_sb)),
        shifts_(std::move(shifts)),
        h0_(std::move(h0)),
        htau_(std::move(htau)),
        ladder_(ladder) {}

  const UnitaryOperator& unitary() const { return u_sb_; }
  const Matrix& matrix() const { return u_sb_.matrix(); }
  /// shifts()[a][b]: rung displacement for final group a, initial group b.
  const std::vector<std::vector<long>>& shifts() const { return shifts_; }
  const HermitianOperator& h0() const { return h0_; }
  const HermitianOperator& htau() const { return htau_; }
  const BatteryLadder& ladder() const { return ladder_; }
  std::size_t system_dim() const { return h0_.dim(); }

  long max_shift() const {
    long m = 0;
    for (const auto& row : shifts_) {
      for (long s : row) m = std::max(m, std::abs(s));
    }
    return m;
  }

  /// U_SB (x) |tau><0| + U_SB^dagger (x) |0><tau| on system (x) battery (x) switch.
  Matrix three_body() const {
    return kron(matrix(), SwitchModel::transition(SwitchModel::kFinal, SwitchModel::kInitial)) +
           kron(matrix().adjoint(), SwitchModel::transition(SwitchModel::kInitial, SwitchModel::kFinal));
  }

 private:
  UnitaryOperator u_sb_;
  std::vector<std::vector<long>> shifts_;
  HermitianOperator h0_;
  HermitianOperator htau_;
  BatteryLadder ladder_;
};

/// Assembles the joint unitary from caller-chosen shifts. Exposed so that
/// deliberately wrong constructions can be tested against the constraints.
/// Entries for blocks where U vanishes are reset to 0.
inline ConditionalShiftUnitary build_conditional_shift_with(const UnitaryOperator& system_u,
                                                            const HermitianOperator& h0,
                                                            const HermitianOperator& htau,
                                                            const BatteryLadder& ladder,
                                                            std::vector<std::vector<long>> shifts) {
  if (system_u.dim() != h0.dim() || h0.dim() != htau.dim()) {
    throw ValidationError("build_conditional_shift: dimension mismatch");
  }
  const auto& initial = h0.spectral();
  const auto& final = htau.spectral();
  if (shifts.size() != final.size()) throw ValidationError("build_conditional_shift: shift table has wrong shape");
  const auto ds = static_cast<Eigen::Index>(h0.dim());
  const auto db = static_cast<Eigen::Index>(ladder.dim());
  Matrix u = Matrix::Zero(ds * db, ds * db);
  for (std::size_t a = 0; a < final.size(); ++a) {
    if (shifts[a].size() != initial.size()) throw ValidationError("build_conditional_shift: shift table has wrong shape");
    for (std::size_t b = 0; b < initial.size(); ++b) {
      const Matrix block = final.projectors[a] * system_u.matrix() * initial.projectors[b];
      if (max_abs(block) <= 1e-14) {
        shifts[a][b] = 0;  // transition never happens; its shift is irrelevant
        continue;
      }
      u += kron(block, ladder.shift(shifts[a][b]));
    }
  }
  return ConditionalShiftUnitary(UnitaryOperator(std::move(u)), std::move(shifts), h0, htau, ladder);
}

/// Energy-conserving lift of a system unitary. Every gap E_n(0) - E_m(tau)
/// must be an integer multiple of the ladder spacing.
inline ConditionalShiftUnitary build_conditional_shift(const UnitaryOperator& system_u, const HermitianOperator& h0,
                                                       const HermitianOperator& htau, const BatteryLadder& ladder) {
  if (h0.dim() != htau.dim()) throw ValidationError("build_conditional_shift: dimension mismatch");
  const auto& initial = h0.spectral();
  const auto& final = htau.spectral();
  const double delta = ladder.delta();
  std::vector<std::vector<long>> shifts(final.size(), std::vector<long>(initial.size(), 0));
  for (std::size_t a = 0; a < final.size(); ++a) {
    for (std::size_t b = 0; b < initial.size(); ++b) {
      const double gap = initial.eigenvalues[b] - final.eigenvalues[a];
      const double steps = std::round(gap / delta);
      if (std::abs(gap - steps * delta) > 1e-9 * delta) {
        throw PreconditionError("build_conditional_shift: gap E_n(0) - E_m(tau) = " + std::to_string(gap) +
                                " (E_n(0) = " + std::to_string(initial.eigenvalues[b]) +
                                ", E_m(tau) = " + std::to_string(final.eigenvalues[a]) +
                                ") is not a multiple of delta = " + std::to_string(delta));
      }
      shifts[a][b] = static_cast<long>(steps);
    }
  }
  return build_conditional_shift_with(system_u, h0, htau, ladder, std::move(shifts));
}

struct ConstraintReport {
  double unitarity;          // max |U^dagger U - I|
  double energy;             // U (H0 + H_B) = (Htau + H_B) U on the margin subspace
  double displacement;       // [Delta_B, U] on the margin subspace
  double global_unitarity;   // three-body operator
  double global_energy;      // [U_total, H_SBC] on the margin subspace
  std::size_t margin;

  double worst() const { return std::max({unitarity, energy, displacement, global_unitarity, global_energy}); }
};

/// Residuals of unitarity, energy conservation and displacement invariance.
/// The last two are evaluated on input rungs [margin, dim_B - margin), where
/// no shift can wrap around the ladder.
inline ConstraintReport verify_constraints(const ConditionalShiftUnitary& u, std::size_t margin) {
  const auto& ladder = u.ladder();
  if (static_cast<long>(margin) < u.max_shift()) {
    throw ValidationError("verify_constraints: margin " + std::to_string(margin) + " below max shift " +
                          std::to_string(u.max_shift()));
  }
  if (2 * margin >= ladder.dim()) {
    throw ValidationError("verify_constraints: margin leaves no interior rungs on a ladder of dim " +
                          std::to_string(ladder.dim()));
  }
  const auto ds = static_cast<Eigen::Index>(u.system_dim());
  const auto db = static_cast<Eigen::Index>(ladder.dim());
  const Matrix is = Matrix::Identity(ds, ds);
  const Matrix ib = Matrix::Identity(db, db);
  const Matrix hb = ladder.hamiltonian().matrix();
  const Matrix& m = u.matrix();
  const Matrix interior = kron(is, ladder.rung_projector(margin, ladder.dim() - margin));
  const Matrix before = kron(u.h0().matrix(), ib) + kron(is, hb);
  const Matrix after = kron(u.htau().matrix(), ib) + kron(is, hb);
  const Matrix displace = kron(is, ladder.shift(1));

  ConstraintReport r{};
  r.margin = margin;
  r.unitarity = UnitaryOperator::unitarity_residual(m);
  r.energy = max_abs((m * before - after * m) * interior);
  r.displacement = max_abs((displace * m - m * displace) * interior);

  const Matrix total = u.three_body();
  const Matrix h_total = build_total_hamiltonian(u.h0(), u.htau(), ladder).matrix();
  const Matrix interior_c = kron(interior, Matrix::Identity(2, 2));
  r.global_unitarity = UnitaryOperator::unitarity_residual(total);
  r.global_energy = max_abs((total * h_total - h_total * total) * interior_c);
  return r;
}

namespace detail {
inline void check_rung(const ConditionalShiftUnitary& u, std::size_t j0, const char* who) {
  const long s = u.max_shift();
  const long j = static_cast<long>(j0);
  if (j - s < 0 || j + s >= static_cast<long>(u.ladder().dim())) {
    throw ValidationError(std::string(who) + ": initial rung " + std::to_string(j0) +
                          " is within the wrap-around margin (max shift " + std::to_string(s) + ", dim_B " +
                          std::to_string(u.ladder().dim()) + ")");
  }
}

inline Matrix rung_state(const BatteryLadder& ladder, std::size_t j0) {
  return ladder.rung_projector(j0, j0 + 1);
}
}  // namespace detail

/// Work statistics read off the battery: H_B is measured before (rung j0,
/// deterministic) and after U_SB, and W = -(E_B(final) - E_B(initial)).
inline WorkDistribution battery_tpm(const DensityMatrix& rho_s0, std::size_t j0, const ConditionalShiftUnitary& u) {
  if (rho_s0.dim() != u.system_dim()) throw ValidationError("battery_tpm: dimension mismatch");
  detail::check_rung(u, j0, "battery_tpm");
  const auto& ladder = u.ladder();
  const auto ds = static_cast<Eigen::Index>(u.system_dim());
  const auto db = static_cast<Eigen::Index>(ladder.dim());
  const Matrix joint = kron(rho_s0.matrix(), detail::rung_state(ladder, j0));
  const Matrix final_b = partial_trace_first(u.matrix() * joint * u.matrix().adjoint(), ds, db);
  std::vector<WorkAtom> atoms;
  for (Eigen::Index j = 0; j < db; ++j) {
    atoms.push_back({ladder.energy(j0) - ladder.energy(static_cast<std::size_t>(j)), final_b(j, j).real()});
  }
  return WorkDistribution(std::move(atoms));
}

/// Tr_B[U_SB rho_S0 (x) |j0><j0| U_SB^dagger] on the system.
inline DensityMatrix battery_final_system_state(const DensityMatrix& rho_s0, std::size_t j0,
                                                const ConditionalShiftUnitary& u) {
  const auto ds = static_cast<Eigen::Index>(u.system_dim());
  const auto db = static_cast<Eigen::Index>(u.ladder().dim());
  const Matrix joint = kron(rho_s0.matrix(), detail::rung_state(u.ladder(), j0));
  return DensityMatrix(partial_trace_second(u.matrix() * joint * u.matrix().adjoint(), ds, db));
}

struct TildeRho {
  HermitianOperator op;
  double trace;  // not renormalized; differs from 1 when system and battery correlate
};

/// (Tr_B[U_SB (rho_S0^gamma (x) |j0><j0|) U_SB^dagger])^{1/gamma}.
inline TildeRho tilde_rho(const DensityMatrix& rho_s0, std::size_t j0, const ConditionalShiftUnitary& u,
                          double gamma) {
  if (gamma == 0.0 || !std::isfinite(gamma)) throw ValidationError("tilde_rho: gamma must be finite and non-zero");
  if (rho_s0.dim() != u.system_dim()) throw ValidationError("tilde_rho: dimension mismatch");
  detail::check_rung(u, j0, "tilde_rho");
  const auto ds = static_cast<Eigen::Index>(u.system_dim());
  const auto db = static_cast<Eigen::Index>(u.ladder().dim());
  const Matrix powered = gamma == 1.0 ? rho_s0.matrix() : psd_power(rho_s0, gamma).matrix();
  const Matrix joint = kron(powered, detail::rung_state(u.ladder(), j0));
  HermitianOperator reduced(partial_trace_second(u.matrix() * joint * u.matrix().adjoint(), ds, db), 1e-10);
  HermitianOperator out = gamma == 1.0 ? reduced : psd_power(reduced, 1.0 / gamma);
  const double tr = out.matrix().trace().real();
  return TildeRho{std::move(out), tr};
}

struct BatteryCgfIdentity {
  double eta;
  double phi_battery;
  double phi_renyi_tilde;
  double residual;
  double tilde_trace;
};

/// Battery-side CGF against -(eta/beta) S_{1-eta/beta}(tilde rho || G_tau) - eta deltaF
/// for a thermal initial system state.
inline BatteryCgfIdentity cgf_battery_identity(const DensityMatrix& rho_s0, std::size_t j0,
                                               const ConditionalShiftUnitary& u, const ThermoPotentials& pots,
                                               double eta) {
  const double beta = pots.beta;
  if (std::abs(eta) <= 1e-14 * beta || std::abs(eta - beta) <= 1e-14 * beta) {
    throw LimitPointError("cgf_battery_identity: eta must avoid 0 and beta");
  }
  const auto g0 = gibbs(u.h0(), beta);
  const double dev = max_abs(rho_s0.matrix() - g0.state.matrix());
  if (dev > 1e-9) {
    throw PreconditionError("cgf_battery_identity: initial system state is not thermal (max deviation " +
                            std::to_string(dev) + ")");
  }
  BatteryCgfIdentity out{};
  out.eta = eta;
  out.phi_battery = cgf_direct(battery_tpm(rho_s0, j0, u), eta);
  const double gamma = 1.0 - eta / beta;
  const auto tilde = tilde_rho(rho_s0, j0, u, gamma);
  out.tilde_trace = tilde.trace;
  const auto g_tau = gibbs(u.htau(), beta);
  out.phi_renyi_tilde = -(eta / beta) * renyi_extended(tilde.op, g_tau.state, gamma) - eta * pots.deltaF;
  out.residual = std::abs(out.phi_battery - out.phi_renyi_tilde);
  return out;
}

}  // namespace qwork
