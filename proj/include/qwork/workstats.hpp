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
#include <complex>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "qwork/dynamics.hpp"
#include "qwork/operators.hpp"

namespace qwork {

struct WorkAtom {
  double w;
  double p;
};

inline double default_merge_tol(const std::vector<WorkAtom>& atoms) {
  double wmax = 0.0;
  for (const auto& a : atoms) wmax = std::max(wmax, std::abs(a.w));
  return 1e-9 * (wmax + 1.0);
}

/// Finite list of (work value, probability) atoms, sorted by work value.
///
/// Atoms closer than the merge tolerance are combined (probabilities added,
/// work value probability-weighted). Atoms whose merged probability is below
/// `kProbabilityFloor` are dropped; this removes round-off residue of exactly
/// forbidden transitions.
class WorkDistribution {
 public:
  static constexpr double kProbabilityFloor = 1e-15;

  explicit WorkDistribution(std::vector<WorkAtom> atoms, std::optional<double> merge_tol = std::nullopt) {
    if (atoms.empty()) throw ValidationError("WorkDistribution: no atoms");
    for (const auto& a : atoms) {
      if (!std::isfinite(a.w) || !std::isfinite(a.p)) {
        throw ValidationError("WorkDistribution: non-finite atom");
      }
      if (a.p < -1e-12) {
        throw ValidationError("WorkDistribution: negative probability " + std::to_string(a.p));
      }
    }
    merge_tol_ = merge_tol.value_or(default_merge_tol(atoms));
    if (!(merge_tol_ >= 0.0)) throw ValidationError("WorkDistribution: merge_tol must be >= 0");

    std::sort(atoms.begin(), atoms.end(), [](const WorkAtom& a, const WorkAtom& b) { return a.w < b.w; });
    std::size_t i = 0;
    while (i < atoms.size()) {
      std::size_t j = i + 1;
      while (j < atoms.size() && atoms[j].w - atoms[j - 1].w <= merge_tol_) ++j;
      double p = 0.0;
      double pw = 0.0;
      for (std::size_t k = i; k < j; ++k) {
        const double pk = std::max(atoms[k].p, 0.0);
        p += pk;
        pw += pk * atoms[k].w;
      }
      if (p > kProbabilityFloor) atoms_.push_back({pw / p, p});
      i = j;
    }
    if (atoms_.empty()) throw ValidationError("WorkDistribution: all probabilities vanish");
    const double total = std::accumulate(atoms_.begin(), atoms_.end(), 0.0,
                                         [](double s, const WorkAtom& a) { return s + a.p; });
    if (std::abs(total - 1.0) > 1e-10) {
      throw ValidationError("WorkDistribution: probabilities sum to " + std::to_string(total));
    }
  }

  static WorkDistribution point_mass(double w) { return WorkDistribution({{w, 1.0}}); }

  const std::vector<WorkAtom>& atoms() const { return atoms_; }
  std::size_t size() const { return atoms_.size(); }
  double merge_tol() const { return merge_tol_; }

 private:
  std::vector<WorkAtom> atoms_;
  double merge_tol_ = 0.0;
};

/// Two-point-measurement work distribution.
///
/// P[m, n] = Tr[Pi_m U Pi_n rho0 Pi_n U^dagger Pi_m] with w = E_m(tau) - E_n(0),
/// where Pi are the (degeneracy-grouped) eigenprojectors of the endpoint
/// Hamiltonians. The first measurement dephases rho0 in the H0 eigenbasis.
inline WorkDistribution tpm_distribution(const DensityMatrix& rho0, const Protocol& protocol,
                                         std::optional<double> merge_tol = std::nullopt) {
  if (rho0.dim() != protocol.dim()) {
    throw ValidationError("tpm_distribution: state dim " + std::to_string(rho0.dim()) +
                          " vs protocol dim " + std::to_string(protocol.dim()));
  }
  const Matrix u = build_unitary(protocol).matrix();
  const auto& initial = protocol.h0().spectral();
  const auto& final = protocol.htau().spectral();

  std::vector<WorkAtom> atoms;
  atoms.reserve(initial.size() * final.size());
  for (std::size_t n = 0; n < initial.size(); ++n) {
    const Matrix& pn = initial.projectors[n];
    const Matrix evolved = u * (pn * rho0.matrix() * pn) * u.adjoint();
    for (std::size_t m = 0; m < final.size(); ++m) {
      const double p = (final.projectors[m] * evolved).trace().real();
      atoms.push_back({final.eigenvalues[m] - initial.eigenvalues[n], p});
    }
  }
  return WorkDistribution(std::move(atoms), merge_tol);
}

struct DistributionDistance {
  double max_w = 0.0;
  double max_p = 0.0;
  bool same_support = true;
};

/// Atom-by-atom comparison of two sorted distributions. Atoms pair up in
/// order; differing atom counts mark the supports as different.
inline DistributionDistance distribution_distance(const WorkDistribution& a, const WorkDistribution& b) {
  DistributionDistance d;
  if (a.size() != b.size()) {
    d.same_support = false;
    d.max_w = d.max_p = std::numeric_limits<double>::infinity();
    return d;
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    d.max_w = std::max(d.max_w, std::abs(a.atoms()[i].w - b.atoms()[i].w));
    d.max_p = std::max(d.max_p, std::abs(a.atoms()[i].p - b.atoms()[i].p));
  }
  d.same_support = d.max_w <= std::max(a.merge_tol(), b.merge_tol());
  return d;
}

inline constexpr int kMaxMomentOrder = 8;

inline double moment(const WorkDistribution& d, int k) {
  if (k < 0 || k > kMaxMomentOrder) {
    throw ValidationError("moment: order must be in [0, 8], got " + std::to_string(k));
  }
  double s = 0.0;
  for (const auto& a : d.atoms()) s += a.p * std::pow(a.w, k);
  return s;
}

inline double mean(const WorkDistribution& d) { return moment(d, 1); }

inline double variance(const WorkDistribution& d) {
  const double mu = mean(d);
  double s = 0.0;
  for (const auto& a : d.atoms()) s += a.p * (a.w - mu) * (a.w - mu);
  return s;
}

/// kappa_1 .. kappa_{up_to}, from central moments.
inline std::vector<double> cumulants(const WorkDistribution& d, int up_to) {
  if (up_to < 1 || up_to > 4) {
    throw ValidationError("cumulants: up_to must be in [1, 4], got " + std::to_string(up_to));
  }
  const double mu = mean(d);
  double c2 = 0.0, c3 = 0.0, c4 = 0.0;
  for (const auto& a : d.atoms()) {
    const double x = a.w - mu;
    c2 += a.p * x * x;
    c3 += a.p * x * x * x;
    c4 += a.p * x * x * x * x;
  }
  const std::vector<double> all{mu, c2, c3, c4 - 3.0 * c2 * c2};
  return {all.begin(), all.begin() + up_to};
}

/// ln sum_i p_i exp(-eta w_i), log-sum-exp shifted.
inline double cgf_direct(const WorkDistribution& d, double eta) {
  if (!std::isfinite(eta)) throw ValidationError("cgf_direct: eta must be finite");
  if (eta == 0.0) return 0.0;
  double shift = -std::numeric_limits<double>::infinity();
  for (const auto& a : d.atoms()) shift = std::max(shift, std::log(a.p) - eta * a.w);
  double s = 0.0;
  for (const auto& a : d.atoms()) s += std::exp(std::log(a.p) - eta * a.w - shift);
  return shift + std::log(s);
}

inline Complex characteristic_fn(const WorkDistribution& d, double eta) {
  Complex s{0.0, 0.0};
  for (const auto& a : d.atoms()) s += a.p * std::polar(1.0, eta * a.w);
  return s;
}

/// Counting-field form of the CGF:
///   ln Tr[e^{-(eta/2) Htau} U e^{(eta/2) H0} rho0 e^{(eta/2) H0} U^dagger e^{-(eta/2) Htau}].
/// Requires rho0 to commute with H0, otherwise the first projective
/// measurement would act non-trivially and the two forms differ.
inline double cgf_fcs(const DensityMatrix& rho0, const Protocol& protocol, double eta) {
  if (rho0.dim() != protocol.dim()) throw ValidationError("cgf_fcs: dimension mismatch");
  if (!std::isfinite(eta)) throw ValidationError("cgf_fcs: eta must be finite");
  const double comm = max_abs(commutator(rho0.matrix(), protocol.h0().matrix()));
  if (comm > 1e-8) {
    throw PreconditionError("cgf_fcs: rho0 does not commute with H0 (max |[rho0, H0]| entry = " +
                            std::to_string(comm) + ")");
  }
  if (eta == 0.0) return 0.0;

  const Matrix u = build_unitary(protocol).matrix();
  const auto& e0 = protocol.h0().eigenvalues();
  const auto& et = protocol.htau().eigenvalues();
  // Shift both exponents toward zero; the offsets come back as eta*(c0 - ct).
  const double c0 = eta > 0 ? e0.maxCoeff() : e0.minCoeff();
  const double ct = eta > 0 ? et.minCoeff() : et.maxCoeff();
  const Matrix a = exp(protocol.h0().shifted(-c0), 0.5 * eta).matrix();
  const Matrix b = exp(protocol.htau().shifted(-ct), -0.5 * eta).matrix();
  const Matrix tilted = b * u * a * rho0.matrix() * a * u.adjoint() * b;
  return std::log(tilted.trace().real()) + eta * (c0 - ct);
}

/// Inverse-CDF sampler over distribution atoms on a seeded 64-bit Mersenne
/// Twister stream; uniforms are built from the top 53 bits so the stream is
/// reproducible across standard libraries.
class AtomSampler {
 public:
  AtomSampler(const WorkDistribution& d, std::uint64_t seed) : rng_(seed) {
    double c = 0.0;
    for (const auto& a : d.atoms()) {
      c += a.p;
      cdf_.push_back(c);
      values_.push_back(a.w);
    }
  }

  double operator()() {
    const double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53 * cdf_.back();
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    const auto idx = std::min<std::size_t>(static_cast<std::size_t>(it - cdf_.begin()), cdf_.size() - 1);
    return values_[idx];
  }

 private:
  std::mt19937_64 rng_;
  std::vector<double> cdf_;
  std::vector<double> values_;
};

struct SampleSet {
  std::vector<double> samples;
  std::uint64_t seed;
  WorkDistribution source;
};

inline SampleSet sample(const WorkDistribution& d, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw ValidationError("sample: n must be >= 1");
  AtomSampler draw(d, seed);
  std::vector<double> out(n);
  for (auto& x : out) x = draw();
  return SampleSet{std::move(out), seed, d};
}

/// `trials` independent totals, each the sum of `copies` i.i.d. draws.
inline std::vector<double> sample_copy_sums(const WorkDistribution& d, std::size_t copies,
                                            std::size_t trials, std::uint64_t seed) {
  if (copies < 1 || trials < 1) throw ValidationError("sample_copy_sums: copies and trials must be >= 1");
  AtomSampler draw(d, seed);
  std::vector<double> out(trials);
  for (auto& total : out) {
    total = 0.0;
    for (std::size_t i = 0; i < copies; ++i) total += draw();
  }
  return out;
}

}  // namespace qwork
