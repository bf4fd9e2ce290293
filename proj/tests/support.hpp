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

#pragma once

#include <cmath>
#include <fstream>
#include <string>

#include <json.hpp>

namespace ptvqe::fixtures {

inline std::string data_path(const std::string& rel) { return std::string(PTVQE_DATA_DIR) + "/" + rel; }

inline nlohmann::json references(const std::string& system) {
  std::ifstream f(data_path(system + "/references.json"));
  return nlohmann::json::parse(f);
}

inline nlohmann::json reference_point(const std::string& system, double bond) {
  const auto refs = references(system);
  for (const auto& p : refs["points"])
    if (std::abs(p["bond_length"].get<double>() - bond) < 1e-9) return p;
  return {};
}

}  // namespace ptvqe::fixtures
