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

// qwork: run, validate and list work-statistics scenarios.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "qwork/scenario.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitContract = 1;
constexpr int kExitError = 2;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw qwork::Error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw qwork::Error("cannot write " + path.string());
  out << text;
}

int cmd_run(const std::string& config_path, const std::string& out_dir, const std::string& format,
            std::optional<std::uint64_t> seed, bool strict) {
  qwork::ScenarioConfig cfg = qwork::parse_config(read_file(config_path), strict);
  for (const auto& w : cfg.warnings) std::cerr << "warning: " << w << '\n';
  if (!format.empty()) cfg.output.format = format;
  if (seed) {
    if (!cfg.sampling) cfg.sampling = qwork::SamplingConfig{};
    cfg.sampling->seed = *seed;
  }

  const auto report = qwork::run_scenario(cfg, qwork::default_threads());

  // the override is kept out of the config echo so reports compare across directories
  const fs::path dir(out_dir.empty() ? cfg.output.path : out_dir);
  fs::create_directories(dir);
  if (cfg.output.format == "csv") {
    for (const auto& [file, text] : qwork::to_csv_tables(report)) write_file(dir / file, text);
  } else {
    auto j = qwork::to_json(report);
    j["meta"]["output_dir"] = dir.string();
    write_file(dir / "report.json", j.dump(2) + "\n");
  }

  std::size_t failed = 0;
  for (const auto& c : report.checks) {
    if (!c.passed) {
      ++failed;
      std::cerr << "FAIL " << c.name << ": " << c.value << " > " << c.threshold << '\n';
    }
  }
  std::cout << report.name << ": " << report.status << ", " << report.checks.size() - failed << "/"
            << report.checks.size() << " checks passed, output in " << dir.string() << '\n';
  if (report.status == "failed") {
    std::cerr << "error: " << report.error << '\n';
    return kExitError;
  }
  return failed == 0 ? kExitOk : kExitContract;
}

int cmd_check(const std::string& config_path, bool strict) {
  const auto cfg = qwork::parse_config(read_file(config_path), strict);
  for (const auto& w : cfg.warnings) std::cerr << "warning: " << w << '\n';
  const auto protocol = qwork::build_protocol(cfg);
  std::cout << cfg.name << ": ok (model " << cfg.model << ", dim " << protocol.dim() << ", "
            << cfg.eta_grid.size() << " eta points, " << cfg.alpha_grid.size() << " alpha points)\n";
  return kExitOk;
}

void cmd_list() {
  for (const auto& m : qwork::model_catalog()) {
    std::cout << m.name << "\n  " << m.description << "\n  protocol.kind:";
    for (const auto& k : m.protocol_kinds) std::cout << ' ' << k;
    std::cout << '\n';
    if (!m.defaults.empty()) {
      std::cout << "  defaults:";
      for (const auto& [k, v] : m.defaults) std::cout << ' ' << k << '=' << v;
      std::cout << '\n';
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"quantum work statistics and Renyi-divergence bounds"};
  app.require_subcommand(1);

  std::string config_path, out_dir, format;
  std::uint64_t seed_value = 0;
  bool strict = false;

  auto* run = app.add_subcommand("run", "run a scenario and write its report");
  run->add_option("config", config_path, "scenario file")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "output directory (overrides output.path)");
  run->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  auto* seed_opt = run->add_option("--seed", seed_value, "sampling seed");
  run->add_flag("--strict", strict, "reject unknown keys");

  auto* check = app.add_subcommand("check", "validate a scenario file");
  check->add_option("config", config_path, "scenario file")->required()->check(CLI::ExistingFile);
  check->add_flag("--strict", strict, "reject unknown keys");

  auto* list = app.add_subcommand("list-scenarios", "list built-in models");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    if (*run) {
      std::optional<std::uint64_t> seed;
      if (*seed_opt) seed = seed_value;
      return cmd_run(config_path, out_dir, format, seed, strict);
    }
    if (*check) return cmd_check(config_path, strict);
    if (*list) {
      cmd_list();
      return kExitOk;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
