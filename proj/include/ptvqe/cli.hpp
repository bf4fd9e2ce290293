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

// Configuration-driven potential energy surface runs.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ptvqe/integrals.hpp"
#include "ptvqe/mitigate.hpp"
#include "ptvqe/perturb.hpp"
#include "ptvqe/qsim.hpp"

namespace ptvqe::cli {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Geometry {
  double bond_length = 0.0;
  std::string fcidump;
};

enum class VqeMode { adapt, fixed_f2 };
enum class RdmMode { exact, shots };
enum class Format { csv, json };

struct RunConfig {
  std::string system;
  std::vector<Geometry> geometries;
  std::vector<int> frozen, inactive, active;
  VqeMode vqe_mode = VqeMode::adapt;
  double eps_grad = 1e-6;
  RdmMode rdm_mode = RdmMode::exact;
  std::uint64_t shots = 10000;  // per measurement group
  qsim::NoiseModel noise;
  bool sv = false;
  bool rdm_reconstruct = false;
  mitigate::ReconstructMode reconstruct_mode = mitigate::ReconstructMode::nearest;
  bool restrict_3rdm = true;
  double screen = 0.0;
  double overlap_threshold = 1e-8;  // metric eigenvalues below this are dropped
  perturb::OrthoMode ortho = perturb::OrthoMode::lowdin;
  bool raw_diagonal = false;
  bool also_diagonalize = true;
  perturb::HbarRoute hbar = perturb::HbarRoute::density;
  std::uint64_t seed = 1;
  std::string output;
  Format format = Format::csv;

  /// Relative FCIDUMP paths resolve against `base_dir`.
  static RunConfig from_json(const nlohmann::json& j, const std::string& base_dir = ".");
  static RunConfig load(const std::string& path);
  /// Files exist, flags are consistent.
  void validate() const;
};

struct Row {
  std::string system;
  double bond_length = 0.0;
  std::string stage;  // exact, raw, sv, rdm, sv+rdm
  double e_vqe = 0.0;
  double e_pt2 = 0.0;
  double e_diag = 0.0;  // NaN when not requested
  double e_casci_active = 0.0;
  double e_casci_nonfrozen = 0.0;
  double e1 = 0.0;
  double max_w = 0.0;            // largest signed W over the unscreened terms
  double max_denominator = 0.0;  // largest E0 - E_mu over the same terms
  int n_excitations = 0;
  int n_kept = 0;
  int n_screened = 0;
  int rdm_order_used = 0;
  double retained_fraction = 1.0;
  std::string status = "ok";

  double vqe_error() const { return e_vqe - e_casci_active; }
  double vqe_total_error() const { return e_vqe - e_casci_nonfrozen; }
  double pt_error() const { return e_pt2 - e_casci_nonfrozen; }
  double diag_error() const { return e_diag - e_casci_nonfrozen; }
};

struct GeometryResult {
  std::vector<Row> rows;
  nlohmann::json details;  // ansatz, mitigation reports, terms
  bool ok = true;
  std::string diagnostic;
};

struct PesTable {
  std::vector<Row> rows;
  std::vector<GeometryResult> geometries;
  nlohmann::json metadata;
  int failures = 0;
};

/// One geometry through VQE, RDMs, mitigation and PT.
GeometryResult run_geometry(const RunConfig& cfg, std::size_t index);
PesTable run_pes(const RunConfig& cfg);

std::vector<std::string> csv_columns();
void emit(const PesTable& table, Format format, std::ostream& out);
void emit(const PesTable& table, Format format, const std::string& path);

/// Applies command-line overrides; `mitigate` is a comma list of sv, rdm or
/// "none".
void apply_mitigate_flag(RunConfig& cfg, const std::string& mitigate);
Format parse_format(const std::string& s);

}  // namespace ptvqe::cli
