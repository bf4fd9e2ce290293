// Copyright 2026 The ptvqe Authors
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


// ptvqe: potential energy surfaces from a JSON run configuration.

#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "ptvqe/cli.hpp"

int main(int argc, char** argv) {
  using namespace ptvqe::cli;
  CLI::App app{"VQE reference states refined by second-order perturbation theory"};
  std::string config, mitigate, output, format;
  std::uint64_t shots = 0, seed = 0;
  double screen = -1.0;
  std::optional<bool> restrict3;
  app.add_option("--config", config, "run configuration (JSON)")->required()->check(CLI::ExistingFile);
  app.add_option("--shots", shots, "shots per measurement group");
  app.add_option("--seed", seed, "master seed");
  app.add_flag("--restrict-3rdm,!--no-restrict-3rdm", restrict3, "drop excitations that need the 4-RDM");
  app.add_option("--screen", screen, "drop excitations with |w| below this threshold");
  app.add_option("--mitigate", mitigate, "comma list of sv, rdm, or none");
  app.add_option("--output", output, "output path (stdout when absent)");
  app.add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  CLI11_PARSE(app, argc, argv);

  try {
    auto cfg = RunConfig::load(config);
    if (app.count("--shots")) cfg.shots = shots;
    if (app.count("--seed")) cfg.seed = seed;
    if (restrict3) cfg.restrict_3rdm = *restrict3;
    if (app.count("--screen")) cfg.screen = screen;
    if (app.count("--mitigate")) apply_mitigate_flag(cfg, mitigate);
    if (app.count("--output")) cfg.output = output;
    if (app.count("--format")) cfg.format = parse_format(format);

    const auto table = run_pes(cfg);
    if (cfg.output.empty())
      emit(table, cfg.format, std::cout);
    else
      emit(table, cfg.format, cfg.output);
    for (const auto& g : table.geometries)
      if (!g.ok) std::fprintf(stderr, "geometry %.4f failed: %s\n", g.details.value("bond_length", 0.0), g.diagnostic.c_str());
    return table.failures ? 2 : 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "ptvqe: %s\n", e.what());
    return 1;
  }
}
