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

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "qwork/scenario.hpp"

using namespace qwork;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;

namespace {

const char* kMinimalFlip = R"(
[system]
model = qubit-flip
beta = 1.0
)";

std::string messages(const std::string& text, bool strict = false) {
  try {
    parse_config(text, strict);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const Check* find_check(const RunReport& r, const std::string& name) {
  for (const auto& c : r.checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

}  // namespace

TEST_CASE("minimal document fills defaults", "[scenario]") {
  const auto cfg = parse_config(kMinimalFlip);
  CHECK(cfg.model == "qubit-flip");
  CHECK(cfg.name == "qubit-flip");
  CHECK(cfg.eta_grid == default_eta_grid(1.0));
  CHECK(cfg.alpha_grid.size() == default_alpha_grid().size());
  CHECK(cfg.params.at("gap") == 1.0);
  CHECK(cfg.protocol_kind == "explicit");
  CHECK_FALSE(cfg.battery.has_value());
  CHECK_FALSE(cfg.sampling.has_value());
  CHECK(cfg.output.format == "json");
}

TEST_CASE("range violations name the field", "[scenario][errors]") {
  CHECK_THAT(messages("[system]\nmodel = qubit-flip\nbeta = -1\n"), ContainsSubstring("beta"));
  CHECK_THAT(messages("[system]\nmodel = qubit-flip\n"), ContainsSubstring("system.beta: missing"));
  CHECK_THAT(messages("[system]\nbeta = 1\n"), ContainsSubstring("system.model: missing"));
  CHECK_THAT(messages("[system]\nmodel = nope\nbeta = 1\n"), ContainsSubstring("unknown model"));
  CHECK_THAT(messages("[system]\nmodel = qubit-flip\nbeta = abc\n"), ContainsSubstring("not a number"));
}

TEST_CASE("every violated field is reported at once", "[scenario][errors]") {
  const std::string text = R"(
[system]
model = qubit-flip
beta = 0
[sampling]
eps = 2
n_samples = 0
[output]
format = xml
)";
  try {
    parse_config(text);
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.issues().size() == 4);
  }
}

TEST_CASE("custom matrices are validated", "[scenario][errors]") {
  const std::string text = R"(
[system]
model = custom
beta = 1
H0 = [[0, 1, 0], [0, 1, 0], [0, 0, 2]]
Htau = [[0, 0, 0], [0, 1, 0], [0, 0, 2]]
[protocol]
kind = quench
)";
  const auto msg = messages(text);
  CHECK_THAT(msg, ContainsSubstring("system.H0: not Hermitian"));
  CHECK_THAT(msg, ContainsSubstring("1.0"));

  CHECK_THAT(messages("[system]\nmodel = custom\nbeta = 1\nH0 = [[0, 1]]\nHtau = [[0]]\n"),
             ContainsSubstring("square"));
  CHECK_THAT(messages("[system]\nmodel = custom\nbeta = 1\nH0 = [[0]]\nHtau = [[0]]\n[protocol]\nU = [[2]]\n"),
             ContainsSubstring("not unitary"));
}

TEST_CASE("complex entries and piecewise custom protocols", "[scenario]") {
  const std::string text = R"(
[system]
model = custom
beta = 0.5
H0 = [[0, [0, 1]], [[0, -1], 1]]
Htau = [[1, 0], [0, 2]]
[protocol]
kind = piecewise
segments = [{"H": [[0, 1], [1, 0]], "dt": 0.3}, {"H": [[1, 0], [0, -1]], "dt": 0.2}]
)";
  const auto cfg = parse_config(text);
  REQUIRE(cfg.h0.has_value());
  CHECK((*cfg.h0)(0, 1) == Complex(0.0, 1.0));
  CHECK(cfg.segments.size() == 2);
  const auto p = build_protocol(cfg);
  CHECK(p.dim() == 2);
  const auto rep = run_scenario(cfg);
  CHECK(rep.status == "ok");
}

TEST_CASE("unknown keys", "[scenario][errors]") {
  const std::string text = std::string(kMinimalFlip) + "colour = blue\n[extra]\nx = 1\n";
  const auto lax = parse_config(text, false);
  CHECK(lax.warnings.size() == 2);
  CHECK_THAT(messages(text, true), ContainsSubstring("system.colour: unknown key"));
  CHECK_THAT(messages(text, true), ContainsSubstring("extra: unknown section"));
}

TEST_CASE("model-specific checks", "[scenario][errors]") {
  CHECK_THAT(messages("[system]\nmodel = ising-quench\nbeta = 1\nn_spins = 9\n"), ContainsSubstring("n_spins"));
  CHECK_THAT(messages("[system]\nmodel = qubit-flip\nbeta = 1\n[protocol]\nkind = quench\n"),
             ContainsSubstring("protocol.kind"));
  CHECK_THAT(messages(std::string(kMinimalFlip) + "[grids]\nalpha_grid = 0.5, 1, 2\n"), ContainsSubstring("must include"));
  CHECK_THAT(messages(std::string(kMinimalFlip) + "[grids]\neta_grid = 0, 1\n"), ContainsSubstring("non-zero"));
  CHECK_THAT(messages(std::string(kMinimalFlip) + "[battery]\ndim_B = 3\nj0 = 5\n"), ContainsSubstring("j0"));
}

TEST_CASE("qubit-flip run", "[scenario]") {
  auto cfg = parse_config(std::string(kMinimalFlip) + "[battery]\n[sampling]\nn_samples = 10000\n");
  const auto rep = run_scenario(cfg, 2);
  CHECK(rep.status == "ok");
  CHECK(rep.all_passed());
  REQUIRE(rep.bridge.has_value());
  CHECK_THAT(rep.bridge->mean_work, WithinAbs(0.462117, 1e-6));
  for (const auto& c : rep.checks) {
    INFO(c.name);
    CHECK(c.value >= 0.0);
    if (c.name != "variance_vs_renyi_derivative") CHECK(c.value < 1e-8);
  }
  REQUIRE(rep.battery.has_value());
  CHECK(rep.battery->product_final_state == false);
  REQUIRE(rep.resource.has_value());
  CHECK_THAT(rep.resource->det.w_det_bound, WithinAbs(1.0, 1e-9));
}

TEST_CASE("uniform-shift run is deterministic work", "[scenario]") {
  auto cfg = parse_config(
      "[system]\nmodel = uniform-shift\nbeta = 1\n[battery]\ndim_B = 9\ndelta = 0.5\nj0 = 4\nmargin = 2\n");
  const auto rep = run_scenario(cfg);
  CHECK(rep.status == "ok");
  CHECK_THAT(rep.bridge->var_work, WithinAbs(0.0, 1e-12));
  CHECK_THAT(rep.bridge->variance.var_relent, WithinAbs(0.0, 1e-12));
  CHECK_THAT(rep.bridge->variance.var_derivative, WithinAbs(0.0, 1e-6));
  REQUIRE(rep.battery.has_value());
  CHECK(rep.battery->product_final_state);
  CHECK(find_check(rep, "product_state_tilde_rho") != nullptr);
  CHECK_THAT(rep.resource->det.w_det_bound, WithinAbs(0.5, 1e-10));
}

TEST_CASE("ising quench run", "[scenario]") {
  const auto start = std::chrono::steady_clock::now();
  const auto rep = run_scenario(parse_config("[system]\nmodel = ising-quench\nbeta = 1\n"), default_threads());
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  CHECK(rep.status == "ok");
  CHECK(seconds < 10.0);
  CHECK(rep.bridge->residuals.jarzynski_direct < 1e-9);
  CHECK(rep.bridge->residuals.jarzynski_renyi_limit < 1e-9);
}

TEST_CASE("stage failures are recorded with context", "[scenario][errors]") {
  // Ising gaps are irrational, so no ladder can pay for them
  const auto rep = run_scenario(parse_config("[system]\nmodel = ising-quench\nbeta = 1\nn_spins = 2\n[battery]\n"));
  CHECK(rep.status == "failed");
  CHECK_THAT(rep.error, ContainsSubstring("battery:"));
  CHECK(rep.bridge.has_value());
  CHECK_FALSE(rep.all_passed());
  const auto j = to_json(rep);
  CHECK(j["status"] == "failed");
  CHECK_THAT(to_csv_tables(rep).at("checks.csv"), ContainsSubstring("# failed"));
}

TEST_CASE("reports are deterministic apart from timing", "[scenario]") {
  const auto cfg = parse_config(std::string(kMinimalFlip) + "[battery]\n[sampling]\nseed = 5\n");
  const auto a = to_json(run_scenario(cfg, 1), false).dump();
  const auto b = to_json(run_scenario(cfg, 3), false).dump();
  CHECK(a == b);
  const auto full = to_json(run_scenario(cfg));
  CHECK(full.contains("meta"));
  CHECK_FALSE(to_json(run_scenario(cfg), false).contains("meta"));
}

TEST_CASE("csv tables", "[scenario]") {
  const auto rep = run_scenario(parse_config(kMinimalFlip));
  const auto tables = to_csv_tables(rep);
  REQUIRE(tables.count("cgf.csv"));
  REQUIRE(tables.count("alpha.csv"));
  CHECK(tables.at("cgf.csv").rfind("eta,phi_direct,phi_fcs,phi_renyi,lower_bound,upper_bound\n", 0) == 0);
  std::istringstream rows(tables.at("cgf.csv"));
  std::string line;
  int count = -1;
  while (std::getline(rows, line)) ++count;
  CHECK(count == 24);
  CHECK_THAT(tables.at("alpha.csv"), ContainsSubstring("\ninf,"));
  CHECK_THAT(detail::g17(0.1), ContainsSubstring("0.10000000000000001"));
}

TEST_CASE("thread count from the environment", "[scenario]") {
  ::setenv("QWORK_THREADS", "3", 1);
  CHECK(default_threads() == 3);
  ::setenv("QWORK_THREADS", "junk", 1);
  CHECK(default_threads() >= 1);
  ::unsetenv("QWORK_THREADS");
  CHECK(default_threads() >= 1);
}

TEST_CASE("shipped scenario files run clean", "[scenario]") {
  for (const auto& entry : std::filesystem::directory_iterator(QWORK_SCENARIO_DIR)) {
    if (entry.path().extension() != ".ini") continue;
    INFO(entry.path().string());
    const auto cfg = parse_config(slurp(entry.path()), true);
    const auto rep = run_scenario(cfg, 2);
    CHECK(rep.status == "ok");
    for (const auto& c : rep.checks) {
      INFO(c.name << " = " << c.value);
      CHECK(c.passed);
    }
  }
}

TEST_CASE("model catalogue", "[scenario]") {
  CHECK(model_catalog().size() == 5);
  for (const auto& m : model_catalog()) CHECK_FALSE(m.protocol_kinds.empty());
}
