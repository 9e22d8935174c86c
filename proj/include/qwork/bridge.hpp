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

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "qwork/divergences.hpp"
#include "qwork/dynamics.hpp"
#include "qwork/operators.hpp"
#include "qwork/parallel.hpp"
#include "qwork/workstats.hpp"

namespace qwork {

/// Multiples of beta used when no counting-field grid is configured:
/// +-{0.05, 0.1, 0.2, 0.3, 0.5, 0.75, 1.25, 1.5, 1.75, 2, 2.25, 2.5}.
inline std::vector<double> default_eta_grid(double beta) {
  static constexpr double kFactors[] = {0.05, 0.1, 0.2, 0.3, 0.5, 0.75, 1.25, 1.5, 1.75, 2.0, 2.25, 2.5};
  std::vector<double> grid;
  for (auto it = std::rbegin(kFactors); it != std::rend(kFactors); ++it) grid.push_back(-*it * beta);
  for (double f : kFactors) grid.push_back(f * beta);
  return grid;
}

namespace detail {
inline bool near(double x, double target, double scale) { return std::abs(x - target) <= 1e-14 * scale; }
}  // namespace detail

/// Renyi form of the CGF for a thermal initial state:
///   Phi(eta) = -(eta/beta) S_{1-eta/beta}(rho_tau || G_tau) - eta * deltaF.
/// eta = 0 and eta = beta are excluded; use Phi(0) = 0 and
/// cgf_via_renyi_at_beta respectively.
inline double cgf_via_renyi(const DensityMatrix& rho_tau, const HermitianOperator& h_tau,
                            const ThermoPotentials& pots, double eta) {
  const double beta = pots.beta;
  if (detail::near(eta, 0.0, beta)) {
    throw LimitPointError("cgf_via_renyi: eta = 0 is a limit point; the CGF vanishes there (cgf_direct(0) = 0)");
  }
  if (detail::near(eta, beta, beta)) {
    throw LimitPointError(
        "cgf_via_renyi: eta = beta is a limit point; use cgf_via_renyi_at_beta or the Jarzynski value -beta*deltaF");
  }
  const auto g_tau = gibbs(h_tau, beta);
  const double order = 1.0 - eta / beta;
  return -(eta / beta) * renyi_extended(rho_tau, g_tau.state, order) - eta * pots.deltaF;
}

/// eta -> beta limit of the Renyi form: -S_0(rho_tau || G_tau) - beta * deltaF.
inline double cgf_via_renyi_at_beta(const DensityMatrix& rho_tau, const HermitianOperator& h_tau,
                                    const ThermoPotentials& pots) {
  const auto g_tau = gibbs(h_tau, pots.beta);
  return -renyi(rho_tau, g_tau.state, 0.0) - pots.beta * pots.deltaF;
}

struct BoundPoint {
  double eta;
  double value;
};

/// Convexity bounds on beta*<W>: lower for eta > 0, upper for eta < 0. Both
/// families are -(beta/eta) Phi(eta).
struct MeanWorkBounds {
  std::vector<BoundPoint> lower;
  std::vector<BoundPoint> upper;
};

inline MeanWorkBounds mean_work_bounds(const std::function<double(double)>& phi, double beta,
                                       const std::vector<double>& eta_grid) {
  MeanWorkBounds out;
  for (double eta : eta_grid) {
    if (eta == 0.0) throw ValidationError("mean_work_bounds: eta grid must exclude 0");
    const double b = -(beta / eta) * phi(eta);
    (eta > 0 ? out.lower : out.upper).push_back({eta, b});
  }
  return out;
}

/// beta * (<W> - deltaF).
inline double irr_entropy(double mean_work, const ThermoPotentials& pots) {
  return pots.beta * (mean_work - pots.deltaF);
}

/// S_{1-eta/beta}(rho_tau || G_tau) for eta in (0, beta); each value lower
/// bounds the mean irreversible entropy.
inline std::vector<BoundPoint> irr_entropy_bound_family(const DensityMatrix& rho_tau,
                                                        const HermitianOperator& h_tau, double beta,
                                                        const std::vector<double>& eta_grid) {
  const auto g_tau = gibbs(h_tau, beta);
  std::vector<BoundPoint> out;
  for (double eta : eta_grid) {
    if (!(eta > 0.0 && eta < beta)) {
      throw ValidationError("irr_entropy_bound_family: eta must lie in (0, beta), got " + std::to_string(eta));
    }
    out.push_back({eta, renyi(rho_tau, g_tau.state, 1.0 - eta / beta)});
  }
  return out;
}

struct VarianceBridge {
  double var_direct;      // kappa_2 of the distribution
  double var_derivative;  // (2/beta^2) dS_alpha/dalpha at alpha = 1
  double var_relent;      // V(rho_tau || G_tau) / beta^2
  double residual_relent;
  double residual_derivative;
  double residual_derivative_vs_relent;
};

inline VarianceBridge variance_bridge(const WorkDistribution& d, const DensityMatrix& rho_tau,
                                      const HermitianOperator& h_tau, double beta, double h = 1e-4) {
  const auto g_tau = gibbs(h_tau, beta);
  VarianceBridge v{};
  v.var_direct = cumulants(d, 2)[1];
  v.var_derivative = 2.0 / (beta * beta) * renyi_alpha_derivative(rho_tau, g_tau.state, h);
  v.var_relent = relative_entropy_variance(rho_tau, g_tau.state) / (beta * beta);
  v.residual_relent = std::abs(v.var_direct - v.var_relent);
  v.residual_derivative = std::abs(v.var_direct - v.var_derivative);
  v.residual_derivative_vs_relent = std::abs(v.var_derivative - v.var_relent);
  return v;
}

struct TailCheck {
  double k;
  double bound;      // 1/k^2
  double threshold;  // <W> + k sigma_W
  double exact_tail;
  std::optional<double> empirical_tail;
  bool zero_variance;  // threshold collapses to <W>; exact_tail is P[W >= <W>]

  bool holds() const { return exact_tail <= bound; }
};

/// P[W >= <W> + k sigma_W] against 1/k^2, exactly and optionally from samples.
inline TailCheck tail_bound_check(const WorkDistribution& d, double k,
                                  const std::optional<SampleSet>& samples = std::nullopt) {
  if (!(k > 0.0) || !std::isfinite(k)) throw ValidationError("tail_bound_check: k must be positive");
  const double mu = mean(d);
  const double var = variance(d);
  TailCheck out{};
  out.k = k;
  out.bound = 1.0 / (k * k);
  out.zero_variance = var <= 1e-24;
  out.threshold = mu + k * std::sqrt(std::max(var, 0.0));
  const double slack = 1e-12 * (1.0 + std::abs(out.threshold));
  for (const auto& a : d.atoms()) {
    if (a.w >= out.threshold - slack) out.exact_tail += a.p;
  }
  if (samples) {
    if (samples->samples.empty()) throw ValidationError("tail_bound_check: empty sample set");
    std::size_t hits = 0;
    for (double w : samples->samples) hits += (w >= out.threshold - slack) ? 1 : 0;
    out.empirical_tail = static_cast<double>(hits) / static_cast<double>(samples->samples.size());
  }
  return out;
}

/// n * (<W> + sqrt(Var(W) / (eps n))): total work over n copies exceeded with
/// probability at most eps.
inline double eps_deterministic_work(const WorkDistribution& d, std::size_t n, double eps) {
  if (n < 1) throw ValidationError("eps_deterministic_work: n must be >= 1");
  if (!(eps > 0.0 && eps < 1.0)) throw ValidationError("eps_deterministic_work: eps must lie in (0, 1)");
  const double nd = static_cast<double>(n);
  return nd * (mean(d) + std::sqrt(std::max(variance(d), 0.0) / (eps * nd)));
}

struct EpsDeterministicCheck {
  double w_eps;
  double frequency;  // fraction of trials whose total exceeded w_eps
  double allowed;    // eps + 3 sqrt(eps / trials)
  std::size_t trials;

  bool holds() const { return frequency <= allowed; }
};

inline EpsDeterministicCheck eps_deterministic_check(const WorkDistribution& d, std::size_t n, double eps,
                                                     std::size_t trials, std::uint64_t seed) {
  EpsDeterministicCheck out{};
  out.w_eps = eps_deterministic_work(d, n, eps);
  out.trials = trials;
  const auto totals = sample_copy_sums(d, n, trials, seed);
  const double slack = 1e-9 * (1.0 + std::abs(out.w_eps));
  std::size_t over = 0;
  for (double t : totals) over += (t > out.w_eps + slack) ? 1 : 0;
  out.frequency = static_cast<double>(over) / static_cast<double>(trials);
  out.allowed = eps + 3.0 * std::sqrt(eps / static_cast<double>(trials));
  return out;
}

/// Maximum deviations of every identity, all nonnegative. Inequalities are
/// reported as their worst violation (0 when satisfied).
struct BridgeResiduals {
  double cgf_fcs_vs_direct = 0.0;
  double cgf_renyi_vs_direct = 0.0;
  double jarzynski_direct = 0.0;
  double jarzynski_fcs = 0.0;
  double jarzynski_renyi_limit = 0.0;
  double irr_entropy_vs_relent = 0.0;
  double variance_relent = 0.0;
  double variance_derivative = 0.0;
  double lower_bound_violation = 0.0;
  double upper_bound_violation = 0.0;
  double irr_bound_violation = 0.0;
  double alpha_above_one_violation = 0.0;
  double second_law_violation = 0.0;
};

struct BridgeReport {
  std::vector<double> eta_grid;
  std::vector<double> phi_direct;
  std::vector<double> phi_fcs;
  std::vector<double> phi_renyi;
  double mean_work = 0.0;
  double var_work = 0.0;
  double delta_f = 0.0;
  double s_irr = 0.0;
  double relative_entropy = 0.0;
  std::vector<BoundPoint> lower_bounds;  // on beta*<W>
  std::vector<BoundPoint> upper_bounds;
  std::vector<BoundPoint> irr_bounds;    // eta in (0, beta)
  std::vector<BoundPoint> renyi_above_one;  // S_{1-eta/beta} for eta < 0
  VarianceBridge variance{};
  BridgeResiduals residuals;
};

/// Evaluates every closed-system identity for a thermal initial state on the
/// given counting-field grid. eta = beta on the grid is evaluated through the
/// limit form.
inline BridgeReport bridge_report(const Protocol& protocol, double beta, const std::vector<double>& eta_grid,
                                  std::size_t threads = 1, double derivative_step = 1e-4) {
  const auto pots = thermo_potentials(protocol.h0(), protocol.htau(), beta);
  const auto g0 = gibbs(protocol.h0(), beta);
  const auto g_tau = gibbs(protocol.htau(), beta);
  const auto u = build_unitary(protocol);
  const auto rho_tau = evolve(g0.state, u);
  const auto dist = tpm_distribution(g0.state, protocol);

  BridgeReport r;
  r.eta_grid = eta_grid;
  for (double eta : eta_grid) {
    if (eta == 0.0 || !std::isfinite(eta)) throw ValidationError("bridge_report: eta grid must be finite and exclude 0");
  }
  struct Row {
    double direct, fcs, renyi;
  };
  const auto rows = parallel_map<Row>(
      eta_grid.size(),
      [&](std::size_t i) {
        const double eta = eta_grid[i];
        const double rv = detail::near(eta, beta, beta) ? cgf_via_renyi_at_beta(rho_tau, protocol.htau(), pots)
                                                        : cgf_via_renyi(rho_tau, protocol.htau(), pots, eta);
        return Row{cgf_direct(dist, eta), cgf_fcs(g0.state, protocol, eta), rv};
      },
      threads);
  auto& res = r.residuals;
  for (const auto& row : rows) {
    r.phi_direct.push_back(row.direct);
    r.phi_fcs.push_back(row.fcs);
    r.phi_renyi.push_back(row.renyi);
    res.cgf_fcs_vs_direct = std::max(res.cgf_fcs_vs_direct, std::abs(row.fcs - row.direct));
    res.cgf_renyi_vs_direct = std::max(res.cgf_renyi_vs_direct, std::abs(row.renyi - row.direct));
  }

  r.mean_work = mean(dist);
  r.var_work = variance(dist);
  r.delta_f = pots.deltaF;
  r.s_irr = irr_entropy(r.mean_work, pots);
  r.relative_entropy = relative_entropy(rho_tau, g_tau.state);

  const double jarzynski = -beta * pots.deltaF;
  res.jarzynski_direct = std::abs(cgf_direct(dist, beta) - jarzynski);
  res.jarzynski_fcs = std::abs(cgf_fcs(g0.state, protocol, beta) - jarzynski);
  res.jarzynski_renyi_limit = std::abs(cgf_via_renyi_at_beta(rho_tau, protocol.htau(), pots) - jarzynski);
  res.irr_entropy_vs_relent = std::abs(r.s_irr - r.relative_entropy);

  r.variance = variance_bridge(dist, rho_tau, protocol.htau(), beta, derivative_step);
  res.variance_relent = r.variance.residual_relent;
  res.variance_derivative = r.variance.residual_derivative;

  auto phi = [&](double eta) { return cgf_direct(dist, eta); };
  const auto bounds = mean_work_bounds(phi, beta, eta_grid);
  r.lower_bounds = bounds.lower;
  r.upper_bounds = bounds.upper;
  const double beta_w = beta * r.mean_work;
  for (const auto& b : r.lower_bounds) res.lower_bound_violation = std::max(res.lower_bound_violation, b.value - beta_w);
  for (const auto& b : r.upper_bounds) res.upper_bound_violation = std::max(res.upper_bound_violation, beta_w - b.value);

  std::vector<double> inner;
  for (double eta : eta_grid) {
    if (eta > 0.0 && eta < beta && !detail::near(eta, beta, beta)) inner.push_back(eta);
  }
  r.irr_bounds = irr_entropy_bound_family(rho_tau, protocol.htau(), beta, inner);
  for (const auto& b : r.irr_bounds) res.irr_bound_violation = std::max(res.irr_bound_violation, b.value - r.s_irr);

  for (double eta : eta_grid) {
    if (eta >= 0.0) continue;
    const double s = renyi(rho_tau, g_tau.state, 1.0 - eta / beta);
    r.renyi_above_one.push_back({eta, s});
    res.alpha_above_one_violation = std::max(res.alpha_above_one_violation, r.s_irr - s);
  }
  res.second_law_violation = std::max(0.0, pots.deltaF - r.mean_work);
  return r;
}

}  // namespace qwork
