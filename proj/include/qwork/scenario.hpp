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

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <cstdlib>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "qwork/battery.hpp"
#include "qwork/bridge.hpp"
#include "qwork/models.hpp"
#include "qwork/resource.hpp"

namespace qwork {

/// Every problem found in a configuration document, one entry per field.
class ConfigError : public ValidationError {
 public:
  explicit ConfigError(std::vector<std::string> issues)
      : ValidationError(join(issues)), issues_(std::move(issues)) {}
  const std::vector<std::string>& issues() const { return issues_; }

 private:
  static std::string join(const std::vector<std::string>& issues) {
    std::string out = "invalid configuration:";
    for (const auto& i : issues) out += "\n  " + i;
    return out;
  }
  std::vector<std::string> issues_;
};

struct BatteryConfig {
  std::size_t dim_B = 7;
  double delta = 1.0;
  std::size_t j0 = 3;
  std::size_t margin = 1;
};

struct SamplingConfig {
  std::size_t n_samples = 10000;
  std::size_t n_copies = 100;
  double eps = 0.1;
  std::uint64_t seed = 42;
  std::vector<double> tail_k{0.5, 1.0, 2.0, 5.0};
};

struct OutputConfig {
  std::string path = "qwork-out";
  std::string format = "json";
};

struct CustomSegment {
  Matrix h;
  double dt;
};

struct ScenarioConfig {
  std::string name;
  double beta = 1.0;
  std::string model;
  std::map<std::string, double> params;  // numeric model parameters, defaults filled
  std::optional<Matrix> h0;              // custom model only
  std::optional<Matrix> htau;
  std::optional<Matrix> unitary;
  std::vector<CustomSegment> segments;
  std::string protocol_kind;  // explicit | piecewise | quench
  std::vector<double> eta_grid;
  std::vector<Alpha> alpha_grid;
  double derivative_step = 1e-4;
  std::optional<BatteryConfig> battery;
  std::optional<SamplingConfig> sampling;
  OutputConfig output;
  std::size_t max_dim = 256;
  std::vector<std::string> warnings;
};

struct ModelInfo {
  std::string name;
  std::string description;
  std::map<std::string, double> defaults;
  std::vector<std::string> protocol_kinds;  // first is the default
};

inline const std::vector<ModelInfo>& model_catalog() {
  static const std::vector<ModelInfo> catalog{
      {"qubit-flip", "H0 = Htau = diag(0, gap), U = sigma_x", {{"gap", 1.0}}, {"explicit"}},
      {"qubit-drive",
       "diag(0, omega(t)) + coupling sin(pi t/T) sigma_x, omega ramped omega0 -> omega1",
       {{"omega0", 1.0}, {"omega1", 2.0}, {"coupling", 0.8}, {"duration", 3.0}, {"steps", 40.0}},
       {"piecewise"}},
      {"uniform-shift", "H0 = diag(0, gap), Htau = H0 + shift*I, sudden quench", {{"gap", 1.0}, {"shift", 0.5}},
       {"quench"}},
      {"ising-quench",
       "open chain -J sum ZZ - h sum X, field h0 -> h1 (sudden, or linear ramp)",
       {{"n_spins", 4.0}, {"J", 1.0}, {"h0", 1.0}, {"h1", 0.5}, {"duration", 1.0}, {"steps", 20.0}},
       {"quench", "piecewise"}},
      {"custom", "explicit H0, Htau and U or segments as JSON matrices", {}, {"explicit", "piecewise", "quench"}},
  };
  return catalog;
}

namespace detail {

inline const ModelInfo* find_model(const std::string& name) {
  for (const auto& m : model_catalog()) {
    if (m.name == name) return &m;
  }
  return nullptr;
}

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::optional<double> parse_number(const std::string& text) {
  const std::string t = trim(text);
  if (t == "inf" || t == "+inf" || t == "infinity") return std::numeric_limits<double>::infinity();
  if (t.empty()) return std::nullopt;
  try {
    std::size_t used = 0;
    const double v = std::stod(t, &used);
    if (used != t.size()) return std::nullopt;
    return v;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

inline std::optional<std::vector<double>> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto v = parse_number(item);
    if (!v) return std::nullopt;
    out.push_back(*v);
  }
  return out;
}

/// JSON array of rows; entries are numbers or [re, im] pairs.
inline Matrix parse_matrix(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  if (!j.is_array() || j.empty()) throw ValidationError("matrix must be a non-empty JSON array of rows");
  const auto n = static_cast<Eigen::Index>(j.size());
  Matrix m(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n) {
      throw ValidationError("matrix must be square");
    }
    for (Eigen::Index c = 0; c < n; ++c) {
      const auto& e = row[static_cast<std::size_t>(c)];
      if (e.is_number()) {
        m(r, c) = e.get<double>();
      } else if (e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number()) {
        m(r, c) = Complex(e[0].get<double>(), e[1].get<double>());
      } else {
        throw ValidationError("matrix entries must be numbers or [re, im] pairs");
      }
    }
  }
  return m;
}

inline nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back({m(r, c).real(), m(r, c).imag()});
    rows.push_back(row);
  }
  return rows;
}

}  // namespace detail

/// Parses the sectioned key/value scenario document. Unknown keys are errors
/// in strict mode and warnings otherwise; every problem is collected before
/// throwing ConfigError.
inline ScenarioConfig parse_config(const std::string& text, bool strict = false) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError({std::string("syntax: ") + e.message() + " (line " + std::to_string(e.line()) + ")"});
  }

  ScenarioConfig cfg;
  std::vector<std::string> issues;
  std::set<std::string> consumed;
  // the ini reader drops empty sections, but "[battery]" alone still means
  // "battery with defaults"
  std::set<std::string> headers;
  {
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
      const std::string t = detail::trim(line);
      if (t.size() > 2 && t.front() == '[' && t.back() == ']') headers.insert(detail::trim(t.substr(1, t.size() - 2)));
    }
  }
  auto has_section = [&](const std::string& name) { return headers.count(name) > 0; };

  auto get = [&](const std::string& section, const std::string& key) -> std::optional<std::string> {
    const auto sec = tree.get_child_optional(section);
    if (!sec) return std::nullopt;
    const auto v = sec->get_optional<std::string>(key);
    if (!v) return std::nullopt;
    consumed.insert(section + "." + key);
    return *v;
  };
  auto number = [&](const std::string& section, const std::string& key, double fallback) {
    const auto v = get(section, key);
    if (!v) return fallback;
    const auto x = detail::parse_number(*v);
    if (!x) {
      issues.push_back(section + "." + key + ": not a number: '" + *v + "'");
      return fallback;
    }
    return *x;
  };
  auto count = [&](const std::string& section, const std::string& key, std::size_t fallback, std::size_t min) {
    const double x = number(section, key, static_cast<double>(fallback));
    if (!(x >= static_cast<double>(min)) || x != std::floor(x) || x > 1e15) {
      issues.push_back(section + "." + key + ": must be an integer >= " + std::to_string(min));
      return fallback;
    }
    return static_cast<std::size_t>(x);
  };
  auto matrix = [&](const std::string& section, const std::string& key, bool hermitian) -> std::optional<Matrix> {
    const auto v = get(section, key);
    if (!v) return std::nullopt;
    try {
      Matrix m = detail::parse_matrix(*v);
      if (hermitian) {
        const double asym = max_abs(m - m.adjoint());
        if (asym > tol::kHermitian) {
          issues.push_back(section + "." + key + ": not Hermitian, max |A - A^dagger| entry = " + std::to_string(asym));
        }
      }
      return m;
    } catch (const std::exception& e) {
      issues.push_back(section + "." + key + ": " + e.what());
      return std::nullopt;
    }
  };

  // [system]
  if (const auto m = get("system", "model")) {
    cfg.model = *m;
  } else {
    issues.push_back("system.model: missing required key");
  }
  if (!get("system", "beta")) {
    issues.push_back("system.beta: missing required key");
  } else {
    consumed.erase("system.beta");
    cfg.beta = number("system", "beta", 1.0);
    if (!(cfg.beta > 0.0) || !std::isfinite(cfg.beta)) issues.push_back("beta: must be positive and finite");
  }
  cfg.name = get("system", "name").value_or(cfg.model);
  cfg.max_dim = count("system", "max_dim", 256, 1);

  const ModelInfo* info = detail::find_model(cfg.model);
  if (!cfg.model.empty() && !info) issues.push_back("system.model: unknown model '" + cfg.model + "'");

  if (info) {
    for (const auto& [key, fallback] : info->defaults) {
      const std::string section = (key == "duration" || key == "steps") ? "protocol" : "system";
      cfg.params[key] = number(section, key, fallback);
    }
    cfg.protocol_kind = get("protocol", "kind").value_or(info->protocol_kinds.front());
    if (std::find(info->protocol_kinds.begin(), info->protocol_kinds.end(), cfg.protocol_kind) ==
        info->protocol_kinds.end()) {
      issues.push_back("protocol.kind: '" + cfg.protocol_kind + "' not available for model " + cfg.model);
    }
    if (cfg.model == "custom") {
      cfg.h0 = matrix("system", "H0", true);
      cfg.htau = matrix("system", "Htau", true);
      if (!cfg.h0) issues.push_back("system.H0: missing required key for custom model");
      if (!cfg.htau) issues.push_back("system.Htau: missing required key for custom model");
      if (cfg.h0 && cfg.htau && cfg.h0->rows() != cfg.htau->rows()) {
        issues.push_back("system.Htau: dimension differs from system.H0");
      }
      if (cfg.protocol_kind == "explicit") {
        cfg.unitary = matrix("protocol", "U", false);
        if (!cfg.unitary) {
          issues.push_back("protocol.U: missing required key for explicit custom protocol");
        } else if (UnitaryOperator::unitarity_residual(*cfg.unitary) > tol::kUnitary) {
          issues.push_back("protocol.U: not unitary, max |U^dagger U - I| entry = " +
                           std::to_string(UnitaryOperator::unitarity_residual(*cfg.unitary)));
        } else if (cfg.h0 && cfg.unitary->rows() != cfg.h0->rows()) {
          issues.push_back("protocol.U: dimension differs from system.H0");
        }
      } else if (cfg.protocol_kind == "piecewise") {
        const auto v = get("protocol", "segments");
        if (!v) {
          issues.push_back("protocol.segments: missing required key for piecewise custom protocol");
        } else {
          try {
            const auto j = nlohmann::json::parse(*v);
            if (!j.is_array() || j.empty()) throw ValidationError("must be a non-empty JSON array");
            for (const auto& seg : j) {
              Matrix h = detail::parse_matrix(seg.at("H").dump());
              if (max_abs(h - h.adjoint()) > tol::kHermitian) throw ValidationError("segment H is not Hermitian");
              cfg.segments.push_back({std::move(h), seg.at("dt").get<double>()});
            }
          } catch (const std::exception& e) {
            issues.push_back(std::string("protocol.segments: ") + e.what());
          }
        }
      }
    }
  }
  if (cfg.model == "ising-quench" && cfg.params.count("n_spins")) {
    const double n = cfg.params["n_spins"];
    if (!(n >= 1.0) || n != std::floor(n) || std::pow(2.0, n) > static_cast<double>(cfg.max_dim)) {
      issues.push_back("system.n_spins: must be an integer with 2^n_spins <= max_dim");
    }
  }
  if (cfg.params.count("steps")) {
    const double s = cfg.params["steps"];
    if (!(s >= 1.0) || s != std::floor(s)) issues.push_back("protocol.steps: must be an integer >= 1");
  }
  if (cfg.h0 && static_cast<std::size_t>(cfg.h0->rows()) > cfg.max_dim) {
    issues.push_back("system.H0: dimension exceeds max_dim");
  }

  // [grids]
  if (const auto v = get("grids", "eta_grid")) {
    const auto list = detail::parse_list(*v);
    if (!list || list->empty()) {
      issues.push_back("grids.eta_grid: must be a non-empty comma-separated list of numbers");
    } else if (std::any_of(list->begin(), list->end(), [](double x) { return x == 0.0 || !std::isfinite(x); })) {
      issues.push_back("grids.eta_grid: values must be finite and non-zero");
    } else {
      cfg.eta_grid = *list;
    }
  } else {
    cfg.eta_grid = default_eta_grid(cfg.beta > 0.0 ? cfg.beta : 1.0);
  }
  if (const auto v = get("grids", "alpha_grid")) {
    const auto list = detail::parse_list(*v);
    if (!list || list->empty() || std::any_of(list->begin(), list->end(), [](double x) { return !(x >= 0.0); })) {
      issues.push_back("grids.alpha_grid: must be a non-empty list of values in [0, inf]");
    } else {
      for (double a : *list) cfg.alpha_grid.emplace_back(a);
      for (double required : {0.0, 0.5, 1.0, 2.0, std::numeric_limits<double>::infinity()}) {
        if (std::find(list->begin(), list->end(), required) == list->end()) {
          issues.push_back("grids.alpha_grid: must include " + Alpha(required).to_string());
        }
      }
    }
  } else {
    cfg.alpha_grid = default_alpha_grid();
  }
  cfg.derivative_step = number("grids", "derivative_step", 1e-4);
  if (!(cfg.derivative_step >= 1e-6 && cfg.derivative_step <= 1e-2)) {
    issues.push_back("grids.derivative_step: must lie in [1e-6, 1e-2]");
  }

  // [battery]
  if (has_section("battery")) {
    BatteryConfig b;
    b.dim_B = count("battery", "dim_B", b.dim_B, 1);
    b.delta = number("battery", "delta", b.delta);
    b.j0 = count("battery", "j0", b.j0, 0);
    b.margin = count("battery", "margin", b.margin, 0);
    if (!(b.delta > 0.0)) issues.push_back("battery.delta: must be positive");
    if (b.j0 >= b.dim_B) issues.push_back("battery.j0: must be below dim_B");
    cfg.battery = b;
  }
  // [sampling]
  if (has_section("sampling")) {
    SamplingConfig s;
    s.n_samples = count("sampling", "n_samples", s.n_samples, 1);
    s.n_copies = count("sampling", "n_copies", s.n_copies, 1);
    s.eps = number("sampling", "eps", s.eps);
    s.seed = count("sampling", "seed", static_cast<std::size_t>(s.seed), 0);
    if (!(s.eps > 0.0 && s.eps < 1.0)) issues.push_back("sampling.eps: must lie in (0, 1)");
    if (const auto v = get("sampling", "tail_k")) {
      const auto list = detail::parse_list(*v);
      if (!list || list->empty() || std::any_of(list->begin(), list->end(), [](double k) { return !(k > 0.0); })) {
        issues.push_back("sampling.tail_k: must be a list of positive numbers");
      } else {
        s.tail_k = *list;
      }
    }
    cfg.sampling = s;
  }
  // [output]
  cfg.output.path = get("output", "path").value_or(cfg.output.path);
  cfg.output.format = get("output", "format").value_or(cfg.output.format);
  if (cfg.output.format != "json" && cfg.output.format != "csv") {
    issues.push_back("output.format: must be csv or json");
  }

  static const std::set<std::string> kSections{"system", "protocol", "grids", "battery", "sampling", "output"};
  for (const auto& section : headers) {
    if (!kSections.count(section)) (strict ? issues : cfg.warnings).push_back(section + ": unknown section");
  }
  for (const auto& [section, child] : tree) {
    if (!kSections.count(section)) continue;
    for (const auto& [key, value] : child) {
      if (!consumed.count(section + "." + key)) {
        const std::string msg = section + "." + key + ": unknown key";
        (strict ? issues : cfg.warnings).push_back(msg);
      }
    }
  }
  if (!issues.empty()) throw ConfigError(std::move(issues));
  return cfg;
}

inline Protocol build_protocol(const ScenarioConfig& cfg) {
  const auto& p = cfg.params;
  auto param = [&](const char* key) { return p.at(key); };
  if (cfg.model == "qubit-flip") return models::qubit_flip(param("gap"));
  if (cfg.model == "uniform-shift") return models::uniform_shift(param("gap"), param("shift"));
  if (cfg.model == "qubit-drive") {
    return models::qubit_drive(param("omega0"), param("omega1"), param("coupling"), param("duration"),
                               static_cast<std::size_t>(param("steps")));
  }
  if (cfg.model == "ising-quench") {
    const bool ramp = cfg.protocol_kind == "piecewise";
    return models::ising_quench(static_cast<std::size_t>(param("n_spins")), param("J"), param("h0"), param("h1"),
                                ramp ? param("duration") : 0.0, ramp ? static_cast<std::size_t>(param("steps")) : 0);
  }
  if (cfg.model == "custom") {
    HermitianOperator h0(*cfg.h0), htau(*cfg.htau);
    if (cfg.protocol_kind == "explicit") return Protocol::with_unitary(h0, htau, UnitaryOperator(*cfg.unitary));
    if (cfg.protocol_kind == "quench") return Protocol::quench(h0, htau);
    PiecewiseDrive drive;
    for (const auto& s : cfg.segments) drive.segments.push_back({HermitianOperator(s.h), s.dt});
    return Protocol(h0, htau, std::move(drive));
  }
  throw ValidationError("build_protocol: unknown model " + cfg.model);
}

/// A hard contract: passes iff value <= threshold.
struct Check {
  std::string name;
  double value;
  double threshold;
  bool passed;
};

struct BatterySection {
  double tpm_max_p_diff = 0.0;
  double tpm_max_w_diff = 0.0;
  bool tpm_same_support = true;
  ConstraintReport constraints{};
  std::vector<BatteryCgfIdentity> identity;
  bool product_final_state = false;
  double product_deviation = 0.0;
  double tilde_vs_final = 0.0;  // only meaningful for product final states
  std::vector<PureBatteryResidual> pure_battery;
};

struct SamplingSection {
  double empirical_mean = 0.0;
  std::vector<TailCheck> tails;
  EpsDeterministicCheck eps_check{};
  double formation_work = 0.0;
};

struct ResourceSection {
  DetWorkReport det{};
  double regime_agreement = 0.0;  // max |S_alpha - irr-entropy family value| at matched alpha in (0,1)
  double ordering_violation = 0.0;
  double free_energy_monotonicity_violation = 0.0;
};

struct RunReport {
  std::string name;
  std::string status = "ok";  // ok | contract-failed | failed
  std::string error;
  std::vector<std::string> warnings;
  std::optional<BridgeReport> bridge;
  std::optional<BatterySection> battery;
  std::optional<ResourceSection> resource;
  std::optional<SamplingSection> sampling;
  std::vector<Check> checks;
  nlohmann::json config_echo;
  double wall_clock_seconds = 0.0;

  bool all_passed() const {
    return status != "failed" &&
           std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
  }
};

inline nlohmann::json config_echo(const ScenarioConfig& cfg) {
  nlohmann::json j;
  j["name"] = cfg.name;
  j["model"] = cfg.model;
  j["beta"] = cfg.beta;
  j["params"] = cfg.params;
  j["protocol_kind"] = cfg.protocol_kind;
  if (cfg.h0) j["H0"] = detail::matrix_to_json(*cfg.h0);
  if (cfg.htau) j["Htau"] = detail::matrix_to_json(*cfg.htau);
  if (cfg.unitary) j["U"] = detail::matrix_to_json(*cfg.unitary);
  j["eta_grid"] = cfg.eta_grid;
  std::vector<std::string> alphas;
  for (const auto& a : cfg.alpha_grid) alphas.push_back(a.to_string());
  j["alpha_grid"] = alphas;
  j["derivative_step"] = cfg.derivative_step;
  if (cfg.battery) {
    j["battery"] = {{"dim_B", cfg.battery->dim_B}, {"delta", cfg.battery->delta}, {"j0", cfg.battery->j0},
                    {"margin", cfg.battery->margin}};
  }
  if (cfg.sampling) {
    j["sampling"] = {{"n_samples", cfg.sampling->n_samples}, {"n_copies", cfg.sampling->n_copies},
                     {"eps", cfg.sampling->eps}, {"seed", cfg.sampling->seed}, {"tail_k", cfg.sampling->tail_k}};
  }
  j["output"] = {{"path", cfg.output.path}, {"format", cfg.output.format}};
  return j;
}

/// Worker count from QWORK_THREADS, else the available parallelism.
inline std::size_t default_threads() {
  if (const char* env = std::getenv("QWORK_THREADS")) {
    const auto v = detail::parse_number(env);
    if (v && *v >= 1.0) return static_cast<std::size_t>(*v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs the full pipeline: distribution, the three CGF routes, bounds,
/// irreversible entropy, variance bridge, tail and multi-copy checks, the
/// optional battery construction and the resource-theoretic bounds. Stage
/// errors are recorded in the report (status "failed") with whatever was
/// computed before them.
inline RunReport run_scenario(const ScenarioConfig& cfg, std::size_t threads = 1) {
  const auto started = std::chrono::steady_clock::now();
  RunReport rep;
  rep.name = cfg.name;
  rep.warnings = cfg.warnings;
  rep.config_echo = config_echo(cfg);
  auto check = [&](std::string name, double value, double threshold) {
    rep.checks.push_back({std::move(name), value, threshold, value <= threshold});
  };

  std::string stage = "protocol";
  try {
    const Protocol protocol = build_protocol(cfg);
    const double beta = cfg.beta;
    const auto pots = thermo_potentials(protocol.h0(), protocol.htau(), beta);
    const auto g0 = gibbs(protocol.h0(), beta);
    const auto u = build_unitary(protocol);
    const auto rho_tau = evolve(g0.state, u);
    const auto dist = tpm_distribution(g0.state, protocol);

    stage = "bridge";
    rep.bridge = bridge_report(protocol, beta, cfg.eta_grid, threads, cfg.derivative_step);
    const auto& br = *rep.bridge;
    const auto& r = br.residuals;
    check("cgf_fcs_vs_direct", r.cgf_fcs_vs_direct, 1e-8);
    check("cgf_renyi_vs_direct", r.cgf_renyi_vs_direct, 1e-8);
    check("jarzynski_direct", r.jarzynski_direct, 1e-9);
    check("jarzynski_fcs", r.jarzynski_fcs, 1e-9);
    check("jarzynski_renyi_limit", r.jarzynski_renyi_limit, 1e-9);
    check("irr_entropy_vs_relative_entropy", r.irr_entropy_vs_relent, 1e-9);
    check("variance_vs_relative_entropy_variance", r.variance_relent, 1e-8);
    check("variance_vs_renyi_derivative", r.variance_derivative, 1e-4);
    check("mean_work_lower_bound_violation", r.lower_bound_violation, 1e-9);
    check("mean_work_upper_bound_violation", r.upper_bound_violation, 1e-9);
    check("irr_entropy_bound_violation", r.irr_bound_violation, 1e-9);
    check("renyi_above_one_violation", r.alpha_above_one_violation, 1e-9);
    check("second_law_violation", r.second_law_violation, 1e-10);

    stage = "sampling";
    {
      const SamplingConfig s = cfg.sampling.value_or(SamplingConfig{});
      SamplingSection sec;
      std::optional<SampleSet> samples;
      if (cfg.sampling) {
        samples = sample(dist, s.n_samples, s.seed);
        double total = 0.0;
        for (double w : samples->samples) total += w;
        sec.empirical_mean = total / static_cast<double>(samples->samples.size());
      }
      double tail_violation = 0.0;
      for (double k : s.tail_k) {
        sec.tails.push_back(tail_bound_check(dist, k, samples));
        const auto& t = sec.tails.back();
        // a point mass has no sigma to scale by; reported, not enforced
        if (!t.zero_variance) tail_violation = std::max(tail_violation, t.exact_tail - t.bound);
      }
      check("tail_bound_violation", tail_violation, 0.0);
      if (cfg.sampling) {
        sec.eps_check = eps_deterministic_check(dist, s.n_copies, s.eps, s.n_samples, s.seed + 1);
        check("eps_deterministic_excess_frequency",
              std::max(0.0, sec.eps_check.frequency - sec.eps_check.allowed), 0.0);
      }
      sec.formation_work = formation_work_estimate(rho_tau, protocol.htau(), beta, s.n_copies, s.eps);
      rep.sampling = sec;
    }

    if (cfg.battery) {
      stage = "battery";
      const auto& b = *cfg.battery;
      BatteryLadder ladder(b.dim_B, b.delta);
      const auto cs = build_conditional_shift(u, protocol.h0(), protocol.htau(), ladder);
      BatterySection sec;
      const auto diff = distribution_distance(battery_tpm(g0.state, b.j0, cs), dist);
      sec.tpm_max_p_diff = diff.max_p;
      sec.tpm_max_w_diff = diff.max_w;
      sec.tpm_same_support = diff.same_support;
      check("battery_tpm_probability_difference", diff.same_support ? diff.max_p : kInfiniteDivergence, 1e-10);
      sec.constraints = verify_constraints(cs, b.margin);
      check("battery_unitarity", sec.constraints.unitarity, 1e-10);
      check("battery_energy_conservation", sec.constraints.energy, 1e-9);
      check("battery_displacement_commutation", sec.constraints.displacement, 1e-10);
      check("global_energy_conservation", sec.constraints.global_energy, 1e-9);
      double worst = 0.0;
      for (double f : {-1.5, -0.75, -0.5, -0.25, 0.25, 0.5, 0.75, 1.5}) {
        sec.identity.push_back(cgf_battery_identity(g0.state, b.j0, cs, pots, f * beta));
        worst = std::max(worst, sec.identity.back().residual);
      }
      check("battery_cgf_identity", worst, 1e-8);

      const auto ds = static_cast<Eigen::Index>(protocol.dim());
      const auto db = static_cast<Eigen::Index>(ladder.dim());
      const Matrix joint = kron(g0.state.matrix(), ladder.rung_projector(b.j0, b.j0 + 1));
      const Matrix fin = cs.matrix() * joint * cs.matrix().adjoint();
      const Matrix rs = partial_trace_second(fin, ds, db);
      const Matrix rb = partial_trace_first(fin, ds, db);
      sec.product_deviation = max_abs(fin - kron(rs, rb));
      sec.product_final_state = sec.product_deviation < 1e-10;
      if (sec.product_final_state) {
        for (double gamma : {0.5, 0.25, -0.5}) {
          sec.tilde_vs_final =
              std::max(sec.tilde_vs_final, max_abs(tilde_rho(g0.state, b.j0, cs, gamma).op.matrix() - rs));
        }
        check("product_state_tilde_rho", sec.tilde_vs_final, 1e-9);
      }
      sec.pure_battery = pure_battery_renyi_check(ladder.energy(b.j0), ladder.hamiltonian(), beta, cfg.alpha_grid);
      double pb = 0.0;
      for (const auto& x : sec.pure_battery) pb = std::max(pb, x.residual);
      check("pure_battery_divergence", pb, 1e-10);
      rep.battery = sec;
    }

    stage = "resource";
    {
      ResourceSection sec;
      sec.det = det_work_bound(g0.state, rho_tau, protocol.h0(), protocol.htau(), beta, cfg.alpha_grid);
      for (const auto& t : sec.det.terms) {
        const double a = t.alpha.value();
        if (!(a > 0.0 && a < 1.0)) continue;
        const auto matched = irr_entropy_bound_family(rho_tau, protocol.htau(), beta, {beta * (1.0 - a)});
        sec.regime_agreement = std::max(sec.regime_agreement, std::abs(t.divergence_tau - matched.front().value));
      }
      check("resource_regime_agreement", sec.regime_agreement, 1e-10);
      if (sec.det.s_irr_det_bound) {
        sec.ordering_violation = std::max(0.0, br.s_irr - *sec.det.s_irr_det_bound);
        check("resource_ordering_violation", sec.ordering_violation, 1e-9);
      }
      // the infinite order is the max-relative entropy, not the Petz limit, so it
      // is left out of the ordering
      std::vector<AlphaTerm> sorted;
      for (const auto& t : sec.det.terms) {
        if (!t.alpha.is_infinite() && std::isfinite(t.free_energy_tau)) sorted.push_back(t);
      }
      std::sort(sorted.begin(), sorted.end(),
                [](const AlphaTerm& x, const AlphaTerm& y) { return x.alpha.value() < y.alpha.value(); });
      for (std::size_t i = 1; i < sorted.size(); ++i) {
        sec.free_energy_monotonicity_violation = std::max(
            sec.free_energy_monotonicity_violation, sorted[i - 1].free_energy_tau - sorted[i].free_energy_tau);
      }
      check("free_energy_monotonicity_violation", sec.free_energy_monotonicity_violation, 1e-9);
      rep.resource = sec;
    }
    stage = "done";
  } catch (const std::exception& e) {
    rep.status = "failed";
    rep.error = stage + ": " + e.what();
  }
  if (rep.status != "failed" && !rep.all_passed()) rep.status = "contract-failed";
  rep.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return rep;
}

namespace detail {

/// Finite doubles as numbers; infinities and NaN as strings so they survive JSON.
inline nlohmann::json num(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

inline nlohmann::json bounds_json(const std::vector<BoundPoint>& pts) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& p : pts) out.push_back({{"eta", num(p.eta)}, {"value", num(p.value)}});
  return out;
}

}  // namespace detail

/// Full report except wall-clock data, which lives under "meta" only when
/// `include_meta` is set.
inline nlohmann::json to_json(const RunReport& rep, bool include_meta = true) {
  using detail::num;
  nlohmann::json j;
  j["name"] = rep.name;
  j["status"] = rep.status;
  if (!rep.error.empty()) j["error"] = rep.error;
  j["warnings"] = rep.warnings;
  j["config"] = rep.config_echo;
  if (rep.bridge) {
    const auto& b = *rep.bridge;
    nlohmann::json grid = nlohmann::json::array();
    for (std::size_t i = 0; i < b.eta_grid.size(); ++i) {
      grid.push_back({{"eta", num(b.eta_grid[i])},
                      {"phi_direct", num(b.phi_direct[i])},
                      {"phi_fcs", num(b.phi_fcs[i])},
                      {"phi_renyi", num(b.phi_renyi[i])}});
    }
    const auto& r = b.residuals;
    j["bridge"] = {
        {"grid", grid},
        {"mean_work", num(b.mean_work)},
        {"var_work", num(b.var_work)},
        {"delta_f", num(b.delta_f)},
        {"s_irr", num(b.s_irr)},
        {"relative_entropy", num(b.relative_entropy)},
        {"lower_bounds", detail::bounds_json(b.lower_bounds)},
        {"upper_bounds", detail::bounds_json(b.upper_bounds)},
        {"irr_bounds", detail::bounds_json(b.irr_bounds)},
        {"renyi_above_one", detail::bounds_json(b.renyi_above_one)},
        {"variance",
         {{"direct", num(b.variance.var_direct)},
          {"renyi_derivative", num(b.variance.var_derivative)},
          {"relative_entropy_variance", num(b.variance.var_relent)}}},
        {"residuals",
         {{"cgf_fcs_vs_direct", num(r.cgf_fcs_vs_direct)},
          {"cgf_renyi_vs_direct", num(r.cgf_renyi_vs_direct)},
          {"jarzynski_direct", num(r.jarzynski_direct)},
          {"jarzynski_fcs", num(r.jarzynski_fcs)},
          {"jarzynski_renyi_limit", num(r.jarzynski_renyi_limit)},
          {"irr_entropy_vs_relent", num(r.irr_entropy_vs_relent)},
          {"variance_relent", num(r.variance_relent)},
          {"variance_derivative", num(r.variance_derivative)},
          {"lower_bound_violation", num(r.lower_bound_violation)},
          {"upper_bound_violation", num(r.upper_bound_violation)},
          {"irr_bound_violation", num(r.irr_bound_violation)},
          {"alpha_above_one_violation", num(r.alpha_above_one_violation)},
          {"second_law_violation", num(r.second_law_violation)}}},
    };
  }
  if (rep.sampling) {
    const auto& s = *rep.sampling;
    nlohmann::json tails = nlohmann::json::array();
    for (const auto& t : s.tails) {
      tails.push_back({{"k", num(t.k)},
                       {"bound", num(t.bound)},
                       {"threshold", num(t.threshold)},
                       {"exact_tail", num(t.exact_tail)},
                       {"empirical_tail", t.empirical_tail ? num(*t.empirical_tail) : nlohmann::json()},
                       {"zero_variance", t.zero_variance}});
    }
    j["sampling"] = {{"empirical_mean", num(s.empirical_mean)},
                     {"tails", tails},
                     {"eps_deterministic",
                      {{"w_eps", num(s.eps_check.w_eps)},
                       {"frequency", num(s.eps_check.frequency)},
                       {"allowed", num(s.eps_check.allowed)},
                       {"trials", s.eps_check.trials}}},
                     {"formation_work", num(s.formation_work)}};
  }
  if (rep.battery) {
    const auto& b = *rep.battery;
    nlohmann::json ident = nlohmann::json::array();
    for (const auto& i : b.identity) {
      ident.push_back({{"eta", num(i.eta)},
                       {"phi_battery", num(i.phi_battery)},
                       {"phi_renyi_tilde", num(i.phi_renyi_tilde)},
                       {"residual", num(i.residual)},
                       {"tilde_trace", num(i.tilde_trace)}});
    }
    nlohmann::json pure = nlohmann::json::array();
    for (const auto& p : b.pure_battery) {
      pure.push_back({{"alpha", p.alpha.to_string()}, {"divergence", num(p.divergence)}, {"residual", num(p.residual)}});
    }
    j["battery"] = {{"tpm_max_p_diff", num(b.tpm_max_p_diff)},
                    {"tpm_max_w_diff", num(b.tpm_max_w_diff)},
                    {"tpm_same_support", b.tpm_same_support},
                    {"constraints",
                     {{"unitarity", num(b.constraints.unitarity)},
                      {"energy", num(b.constraints.energy)},
                      {"displacement", num(b.constraints.displacement)},
                      {"global_unitarity", num(b.constraints.global_unitarity)},
                      {"global_energy", num(b.constraints.global_energy)},
                      {"margin", b.constraints.margin}}},
                    {"cgf_identity", ident},
                    {"product_final_state", b.product_final_state},
                    {"product_deviation", num(b.product_deviation)},
                    {"tilde_vs_final", num(b.tilde_vs_final)},
                    {"pure_battery", pure}};
  }
  if (rep.resource) {
    const auto& r = *rep.resource;
    nlohmann::json terms = nlohmann::json::array();
    for (const auto& t : r.det.terms) {
      terms.push_back({{"alpha", t.alpha.to_string()},
                       {"F_alpha_tau", num(t.free_energy_tau)},
                       {"F_alpha_0", num(t.free_energy_0)},
                       {"difference", num(t.difference)},
                       {"S_alpha_tau", num(t.divergence_tau)}});
    }
    j["resource"] = {{"w_det_bound", num(r.det.w_det_bound)},
                     {"s_irr_det_bound", r.det.s_irr_det_bound ? num(*r.det.s_irr_det_bound) : nlohmann::json()},
                     {"alpha_star", r.det.alpha_star.to_string()},
                     {"terms", terms},
                     {"warnings", r.det.warnings},
                     {"regime_agreement", num(r.regime_agreement)},
                     {"ordering_violation", num(r.ordering_violation)},
                     {"free_energy_monotonicity_violation", num(r.free_energy_monotonicity_violation)}};
  }
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : rep.checks) {
    checks.push_back({{"name", c.name}, {"value", num(c.value)}, {"threshold", num(c.threshold)}, {"passed", c.passed}});
  }
  j["checks"] = checks;
  j["all_passed"] = rep.all_passed();
  if (include_meta) j["meta"] = {{"wall_clock_seconds", rep.wall_clock_seconds}};
  return j;
}

namespace detail {
inline std::string g17(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}
}  // namespace detail

/// CSV tables: cgf.csv (eta grid), alpha.csv (alpha grid), checks.csv.
inline std::map<std::string, std::string> to_csv_tables(const RunReport& rep) {
  using detail::g17;
  std::map<std::string, std::string> out;
  if (rep.bridge) {
    const auto& b = *rep.bridge;
    std::map<double, double> lower, upper;
    for (const auto& p : b.lower_bounds) lower[p.eta] = p.value;
    for (const auto& p : b.upper_bounds) upper[p.eta] = p.value;
    std::ostringstream os;
    os << "eta,phi_direct,phi_fcs,phi_renyi,lower_bound,upper_bound\n";
    for (std::size_t i = 0; i < b.eta_grid.size(); ++i) {
      const double eta = b.eta_grid[i];
      os << g17(eta) << ',' << g17(b.phi_direct[i]) << ',' << g17(b.phi_fcs[i]) << ',' << g17(b.phi_renyi[i]) << ','
         << (lower.count(eta) ? g17(lower[eta]) : "") << ',' << (upper.count(eta) ? g17(upper[eta]) : "") << '\n';
    }
    out["cgf.csv"] = os.str();
  }
  if (rep.resource) {
    std::ostringstream os;
    os << "alpha,F_alpha_tau,F_alpha_0,difference,S_alpha_tau\n";
    for (const auto& t : rep.resource->det.terms) {
      os << t.alpha.to_string() << ',' << g17(t.free_energy_tau) << ',' << g17(t.free_energy_0) << ','
         << g17(t.difference) << ',' << g17(t.divergence_tau) << '\n';
    }
    out["alpha.csv"] = os.str();
  }
  std::ostringstream os;
  os << "name,value,threshold,passed\n";
  for (const auto& c : rep.checks) {
    os << c.name << ',' << g17(c.value) << ',' << g17(c.threshold) << ',' << (c.passed ? "true" : "false") << '\n';
  }
  if (rep.status == "failed") os << "# failed: " << rep.error << '\n';
  out["checks.csv"] = os.str();
  return out;
}

}  // namespace qwork
