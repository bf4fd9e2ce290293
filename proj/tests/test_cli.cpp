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


#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ptvqe/cli.hpp"
#include "support.hpp"

using namespace ptvqe;
using namespace ptvqe::cli;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json hf_config(std::vector<double> bonds) {
  json g = json::array();
  for (double b : bonds) {
    char name[32];
    std::snprintf(name, sizeof name, "hf/hf_%.2f.fcidump", b);
    g.push_back({{"bond_length", b}, {"fcidump", name}});
  }
  return {{"system", "hf"},
          {"geometries", g},
          {"partition", {{"inactive", {0, 1, 2}}, {"active", {3, 4, 5}}}},
          {"vqe", {{"mode", "adapt"}, {"eps_grad", 1e-6}}}};
}

json f2_config(std::vector<double> bonds) {
  json g = json::array();
  for (double b : bonds) {
    char name[32];
    std::snprintf(name, sizeof name, "f2/f2_%.2f.fcidump", b);
    g.push_back({{"bond_length", b}, {"fcidump", name}});
  }
  return {{"system", "f2"},
          {"geometries", g},
          {"partition", {{"frozen", {0, 1}}, {"inactive", {2, 3, 4, 5, 6, 7}}, {"active", {8, 9}}}},
          {"vqe", {{"mode", "fixed_f2"}}},
          {"rdm", {{"mode", "shots"}, {"shots", 2000}, {"noise", {{"depol_p", 0.01}, {"readout_p01", 0.02}, {"readout_p10", 0.02}}}}},
          {"mitigation", {{"sv", true}, {"rdm_reconstruct", true}}},
          {"pt", {{"restrict_3rdm", false}, {"hbar", "engine"}}},
          {"seed", 7}};
}

RunConfig config(const json& j) { return RunConfig::from_json(j, PTVQE_DATA_DIR); }

std::string render(const PesTable& t, Format f) {
  std::ostringstream out;
  emit(t, f, out);
  return out.str();
}

std::vector<std::string> data_lines(const std::string& csv) {
  std::vector<std::string> out;
  std::istringstream in(csv);
  for (std::string line; std::getline(in, line);)
    if (!line.empty() && line[0] != '#') out.push_back(line);
  return out;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  for (std::string f; std::getline(ss, f, ',');) out.push_back(f);
  return out;
}

}  // namespace

TEST(Config, ParsesAndResolvesPaths) {
  auto j = hf_config({0.9});
  j["pt"] = {{"restrict_3rdm", false}, {"screen", 1e-6}, {"hbar", "engine"}};
  j["output"] = {{"path", "x.json"}, {"format", "json"}};
  const auto cfg = config(j);
  EXPECT_EQ(cfg.system, "hf");
  ASSERT_EQ(cfg.geometries.size(), 1u);
  EXPECT_TRUE(fs::exists(cfg.geometries[0].fcidump));
  EXPECT_FALSE(cfg.restrict_3rdm);
  EXPECT_DOUBLE_EQ(cfg.screen, 1e-6);
  EXPECT_EQ(cfg.hbar, perturb::HbarRoute::engine);
  EXPECT_EQ(cfg.format, Format::json);
  EXPECT_NO_THROW(cfg.validate());
}

TEST(Config, CommittedConfigsLoad) {
  for (const char* name : {"hf", "n2", "f2"}) {
    const auto cfg = RunConfig::load(std::string(PTVQE_SOURCE_DIR) + "/tools/configs/" + name + ".json");
    EXPECT_GE(cfg.geometries.size(), 6u) << name;
    EXPECT_NO_THROW(cfg.validate()) << name;
  }
}

TEST(Config, Errors) {
  auto bad_mode = hf_config({0.9});
  bad_mode["vqe"]["mode"] = "uccsd";
  EXPECT_THROW(config(bad_mode), ConfigError);
  auto no_partition = hf_config({0.9});
  no_partition.erase("partition");
  EXPECT_THROW(config(no_partition), ConfigError);
  auto missing = hf_config({0.9});
  missing["geometries"][0]["fcidump"] = "hf/none.fcidump";
  EXPECT_THROW(config(missing).validate(), ConfigError);
  auto negative = config(hf_config({0.9}));
  negative.screen = -1.0;
  EXPECT_THROW(negative.validate(), ConfigError);
  EXPECT_THROW(RunConfig::load("/nonexistent/config.json"), ConfigError);
  EXPECT_THROW(parse_format("xml"), ConfigError);
}

TEST(Config, MitigateFlag) {
  RunConfig cfg;
  apply_mitigate_flag(cfg, "sv,rdm");
  EXPECT_TRUE(cfg.sv);
  EXPECT_TRUE(cfg.rdm_reconstruct);
  apply_mitigate_flag(cfg, "rdm");
  EXPECT_FALSE(cfg.sv);
  EXPECT_TRUE(cfg.rdm_reconstruct);
  apply_mitigate_flag(cfg, "none");
  EXPECT_FALSE(cfg.sv || cfg.rdm_reconstruct);
  EXPECT_THROW(apply_mitigate_flag(cfg, "zne"), ConfigError);
}

TEST(Pes, EmptyGeometryListGivesHeaderOnly) {
  const auto t = run_pes(config(hf_config({})));
  EXPECT_TRUE(t.rows.empty());
  const auto lines = data_lines(render(t, Format::csv));
  ASSERT_EQ(lines.size(), 1u);
  EXPECT_EQ(split(lines[0]).size(), csv_columns().size());
  const auto j = json::parse(render(t, Format::json));
  EXPECT_TRUE(j["rows"].empty());
}

TEST(Pes, SingleGeometry) {
  const auto t = run_pes(config(hf_config({0.9})));
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_EQ(t.failures, 0);
  const auto& r = t.rows[0];
  EXPECT_EQ(r.stage, "exact");
  EXPECT_EQ(r.status, "ok");
  EXPECT_LE(std::abs(r.pt_error()), 1.6e-3);
  EXPECT_LT(std::abs(r.pt_error()), std::abs(r.vqe_total_error()));
  const auto lines = data_lines(render(t, Format::csv));
  ASSERT_EQ(lines.size(), 2u);
  EXPECT_EQ(split(lines[0]), csv_columns());
}

TEST(Pes, HfCurveWithinChemicalAccuracy) {
  const auto t = run_pes(config(hf_config({0.7, 0.9, 1.1, 1.3, 1.5, 1.7, 1.9, 2.1, 2.3, 2.5})));
  ASSERT_EQ(t.rows.size(), 10u);
  double worst = 0.0;
  for (const auto& r : t.rows) worst = std::max(worst, std::abs(r.pt_error()));
  EXPECT_LT(worst, 1.6e-3);
}

TEST(Pes, RowsSortedByBondLength) {
  const auto t = run_pes(config(hf_config({1.5, 0.9})));
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_LT(t.rows[0].bond_length, t.rows[1].bond_length);
}

TEST(Pes, ExactModeIgnoresMitigation) {
  auto plain = config(hf_config({0.9}));
  auto toggled = plain;
  toggled.sv = toggled.rdm_reconstruct = true;
  const auto a = run_pes(plain);
  const auto b = run_pes(toggled);
  ASSERT_EQ(a.rows.size(), b.rows.size());
  const auto la = data_lines(render(a, Format::csv));
  const auto lb = data_lines(render(b, Format::csv));
  EXPECT_EQ(la, lb);
  EXPECT_TRUE(b.metadata["mitigation"].is_string());
}

TEST(Pes, SampledRunIsReproducible) {
  const auto cfg = config(f2_config({1.4}));
  const auto a = render(run_pes(cfg), Format::csv);
  const auto b = render(run_pes(cfg), Format::csv);
  EXPECT_EQ(a, b);
  auto other = cfg;
  other.seed = 8;
  EXPECT_NE(a, render(run_pes(other), Format::csv));
}

TEST(Pes, SampledStages) {
  const auto t = run_pes(config(f2_config({1.4})));
  ASSERT_EQ(t.rows.size(), 3u);
  EXPECT_EQ(t.rows[0].stage, "raw");
  EXPECT_EQ(t.rows[1].stage, "sv");
  EXPECT_EQ(t.rows[2].stage, "sv+rdm");
  EXPECT_DOUBLE_EQ(t.rows[0].retained_fraction, 1.0);
  EXPECT_GT(t.rows[1].retained_fraction, 0.5);
  EXPECT_LT(t.rows[1].retained_fraction, 1.0);
  const auto& stages = t.geometries[0].details["stages"];
  EXPECT_TRUE(stages["sv+rdm"]["mitigation"].contains("reconstruction"));
}

TEST(Pes, CsvAndJsonAgree) {
  const auto t = run_pes(config(f2_config({1.2, 2.0})));
  const auto lines = data_lines(render(t, Format::csv));
  const auto j = json::parse(render(t, Format::json));
  const auto cols = csv_columns();
  ASSERT_EQ(lines.size(), j["rows"].size() + 1);
  for (std::size_t i = 0; i < j["rows"].size(); ++i) {
    const auto f = split(lines[i + 1]);
    const auto& row = j["rows"][i];
    ASSERT_EQ(f.size(), cols.size());
    for (std::size_t c = 0; c < cols.size(); ++c) {
      const auto& v = row[cols[c]];
      if (v.is_string()) {
        EXPECT_EQ(f[c], v.get<std::string>());
      } else if (v.is_null()) {
        EXPECT_EQ(f[c], "nan");
      } else {
        const double x = std::stod(f[c]), y = v.get<double>();
        EXPECT_LE(std::abs(x - y), 1e-15 * std::max(1.0, std::abs(y))) << cols[c];
      }
    }
  }
}

TEST(Pes, PartialFailureIsReported) {
  const auto dir = fs::temp_directory_path() / "ptvqe_cli_test";
  fs::create_directories(dir);
  std::ofstream(dir / "broken.fcidump") << "&FCI NORB=2,NELEC=2,\n&END\n garbage\n";
  auto j = hf_config({0.9});
  j["geometries"].push_back({{"bond_length", 1.0}, {"fcidump", (dir / "broken.fcidump").string()}});
  const auto t = run_pes(config(j));
  EXPECT_EQ(t.failures, 1);
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[0].status, "ok");
  EXPECT_EQ(t.rows[1].stage, "failed");
  EXPECT_NE(t.rows[1].status.find("error"), std::string::npos);
  EXPECT_FALSE(t.geometries[1].ok);
  fs::remove_all(dir);
}
