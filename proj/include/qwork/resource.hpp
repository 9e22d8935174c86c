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

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "qwork/divergences.hpp"
#include "qwork/operators.hpp"

namespace qwork {

/// F_alpha(rho, G) = -beta^{-1} [ln Z - S_alpha(rho || G)], G the Gibbs state
/// of h. +inf when the divergence is infinite.
inline double alpha_free_energy(const HermitianOperator& rho, const HermitianOperator& h, double beta, Alpha alpha) {
  const auto g = gibbs(h, beta);
  const double s = renyi(rho, g.state, alpha);
  if (is_infinite_divergence(s)) return kInfiniteDivergence;
  return -(g.log_Z - s) / beta;
}

inline std::vector<Alpha> default_alpha_grid() {
  return {0.0, 0.1, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 5.0, Alpha::infinity()};
}

struct AlphaFreeEnergyCurve {
  std::vector<Alpha> alpha_grid;
  std::vector<double> values;
  double supremum = -std::numeric_limits<double>::infinity();
};

inline AlphaFreeEnergyCurve alpha_free_energy_curve(const HermitianOperator& rho, const HermitianOperator& h,
                                                    double beta, const std::vector<Alpha>& grid) {
  AlphaFreeEnergyCurve c;
  c.alpha_grid = grid;
  for (const auto& a : grid) {
    c.values.push_back(alpha_free_energy(rho, h, beta, a));
    c.supremum = std::max(c.supremum, c.values.back());
  }
  return c;
}

struct AlphaTerm {
  Alpha alpha;
  double free_energy_tau;
  double free_energy_0;
  double difference;
  double divergence_tau;  // S_alpha(rho_tau || G_tau)
};

struct DetWorkReport {
  double w_det_bound;
  std::optional<double> s_irr_det_bound;  // only for a thermal initial state
  Alpha alpha_star = 0.0;
  double delta_f;
  std::vector<AlphaTerm> terms;
  std::vector<std::string> warnings;
};

/// Deterministic-work bound sup_alpha [F_alpha(rho_tau, G_tau) - F_alpha(rho_0, G_0)].
/// The grid must contain 0, 0.5, 1, 2 and inf. Orders at which either free
/// energy is infinite are dropped from the supremum with a warning.
inline DetWorkReport det_work_bound(const DensityMatrix& rho0, const DensityMatrix& rho_tau, const HermitianOperator& h0,
                                    const HermitianOperator& htau, double beta, const std::vector<Alpha>& alpha_grid) {
  for (double required : {0.0, 0.5, 1.0, 2.0, std::numeric_limits<double>::infinity()}) {
    const bool present = std::any_of(alpha_grid.begin(), alpha_grid.end(),
                                     [&](const Alpha& a) { return a.value() == required; });
    if (!present) {
      throw ValidationError("det_work_bound: alpha grid must include " + Alpha(required).to_string());
    }
  }
  const auto g0 = gibbs(h0, beta);
  const auto gt = gibbs(htau, beta);
  DetWorkReport r{};
  r.delta_f = gt.F - g0.F;
  r.w_det_bound = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (const auto& a : alpha_grid) {
    AlphaTerm t{a, alpha_free_energy(rho_tau, htau, beta, a), alpha_free_energy(rho0, h0, beta, a), 0.0,
                renyi(rho_tau, gt.state, a)};
    if (std::isinf(t.free_energy_tau) || std::isinf(t.free_energy_0)) {
      r.warnings.push_back("alpha = " + a.to_string() + " excluded: infinite divergence");
      t.difference = std::numeric_limits<double>::quiet_NaN();
      r.terms.push_back(t);
      continue;
    }
    t.difference = t.free_energy_tau - t.free_energy_0;
    if (!any || t.difference > r.w_det_bound) {
      r.w_det_bound = t.difference;
      r.alpha_star = a;
      any = true;
    }
    r.terms.push_back(t);
  }
  if (!any) throw DomainError("det_work_bound: every alpha on the grid has an infinite divergence");
  // Petz orders above 2 can exceed the max-relative entropy for non-commuting pairs
  if (!r.alpha_star.is_infinite()) {
    for (const auto& t : r.terms) {
      if (t.alpha.is_infinite() && std::isfinite(t.difference) && t.difference < r.w_det_bound) {
        r.warnings.push_back("supremum attained at alpha = " + r.alpha_star.to_string() +
                             ", above the alpha = inf value");
      }
    }
  }
  if (max_abs(rho0.matrix() - g0.state.matrix()) <= 1e-9) r.s_irr_det_bound = beta * (r.w_det_bound - r.delta_f);
  return r;
}

struct PureBatteryResidual {
  Alpha alpha;
  double divergence;
  double expected;  // beta E + ln Z_B
  double residual;
};

/// S_alpha(|E><E| || G_B) against beta E + ln Z_B for an eigenvalue E of h_b.
inline std::vector<PureBatteryResidual> pure_battery_renyi_check(double energy, const HermitianOperator& h_b,
                                                                 double beta, const std::vector<Alpha>& alpha_grid) {
  const auto& sd = h_b.spectral();
  Eigen::Index hit = -1;
  for (Eigen::Index i = 0; i < sd.raw_eigenvalues.size(); ++i) {
    if (std::abs(sd.raw_eigenvalues(i) - energy) <= 1e-9 * (1.0 + std::abs(energy))) {
      hit = i;
      break;
    }
  }
  if (hit < 0) throw ValidationError("pure_battery_renyi_check: E = " + std::to_string(energy) + " is not in the spectrum");
  const auto g = gibbs(h_b, beta);
  const auto rho = DensityMatrix::pure(sd.eigenvectors.col(hit));
  const double expected = beta * sd.raw_eigenvalues(hit) + g.log_Z;
  std::vector<PureBatteryResidual> out;
  for (const auto& a : alpha_grid) {
    const double s = renyi(rho, g.state, a);
    out.push_back({a, s, expected, std::abs(s - expected)});
  }
  return out;
}

/// (1 - eps) quantile of the standard normal.
inline double normal_upper_quantile(double eps) {
  return boost::math::quantile(boost::math::normal_distribution<double>(0.0, 1.0), 1.0 - eps);
}

/// beta^{-1} [n D(rho || G) + sqrt(n V(rho || G)) f(eps)]; f defaults to the
/// standard-normal (1 - eps) quantile.
inline double formation_work_estimate(const HermitianOperator& rho, const HermitianOperator& h, double beta,
                                      std::size_t n, double eps,
                                      const std::function<double(double)>& f = normal_upper_quantile) {
  if (n < 1) throw ValidationError("formation_work_estimate: n must be >= 1");
  if (!(eps > 0.0 && eps < 1.0)) throw ValidationError("formation_work_estimate: eps must lie in (0, 1)");
  const double fe = f(eps);
  if (!(fe > 0.0)) throw ValidationError("formation_work_estimate: f(eps) must be positive, got " + std::to_string(fe));
  const auto g = gibbs(h, beta);
  const double d = relative_entropy(rho, g.state);
  const double v = std::max(relative_entropy_variance(rho, g.state), 0.0);
  const double nd = static_cast<double>(n);
  return (nd * d + std::sqrt(nd * v) * fe) / beta;
}

}  // namespace qwork
