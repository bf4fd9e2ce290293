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

// Symmetry verification and N-representability repair of measured RDMs.
//
// Two-body blocks use the pair basis of rdm::Rdm (sorted pairs, mask order):
//   2D^{pq}_{rs} = 1/2 <a+p a+q a_s a_r>,  2Q^{pq}_{rs} = 1/2 <a_p a_q a+s a+r>
// and the particle-hole matrix over all ordered pairs (p r + q rows)
//   2G^{pq}_{rs} = <a+p a_q a+s a_r>.
#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "ptvqe/integrals.hpp"
#include "ptvqe/qsim.hpp"
#include "ptvqe/rdm.hpp"

namespace ptvqe::mitigate {

class MitigationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SymmetrySpec {
  qsim::PauliString op;
  int sector = 1;

  /// All-Z parity over the first n qubits.
  static SymmetrySpec parity(int n_qubits, int sector = 1);
  void validate() const;
  /// Norm of [S, H] must vanish.
  void check_commutes(const qsim::PauliSum& h, double tol = 1e-10) const;
};

/// (<P> + s<PS>) / (1 + s<S>)
double sv_expectation(double p, double ps, double s_exp, int s);

struct PostSelection {
  qsim::Counts counts;
  double retained_fraction = 0.0;
};

/// Keeps bitstrings in the symmetry sector; `basis` holds the measured
/// letter of every qubit and must read Z on the support of the symmetry.
PostSelection sv_postselect(const qsim::Counts& counts, const SymmetrySpec& spec, const std::string& basis);

/// Measurement plan extended by P S for every string and by S itself.
struct SvPlan {
  rdm::MeasurementPlan plan;
  std::size_t n_strings = 0;            // leading entries of plan.strings are the originals
  std::vector<std::size_t> ps_index;    // position of P S, per original string
  std::vector<double> ps_sign;          // P S = sign * plan.strings[ps_index]
  std::size_t s_index = 0;
  SymmetrySpec spec;
};

SvPlan sv_measurement_plan(const std::vector<qsim::PauliString>& strings, const SymmetrySpec& spec,
                           std::uint64_t shots_per_group);

struct SvEstimate {
  std::vector<double> raw;        // plain parity averages of the original strings
  std::vector<double> verified;   // post-selected or ratio-corrected
  double retained_fraction = 1.0;  // shot-weighted over post-selected groups
  int postselected_groups = 0;
  int ratio_groups = 0;
};

SvEstimate sv_string_expectations(const SvPlan& plan, const std::vector<qsim::Counts>& counts);

struct PositivityBundle {
  Eigen::MatrixXd d2;  // pair basis
  Eigen::MatrixXd q2;  // pair basis
  Eigen::MatrixXd g2;  // r^2 x r^2
  Eigen::MatrixXd d1;
  Eigen::MatrixXd q1;
  int n_particles = 0;
  int rank = 0;

  struct MinEigenvalues {
    double d2, q2, g2, d1, q1;
  };
  MinEigenvalues min_eigenvalues() const;
};

/// Derives 2Q, 2G, 1D (contraction with 1/(N-1)) and 1Q from a 2-RDM.
PositivityBundle build_bundle(const rdm::RealRdm& d2, int n_particles);

/// 1Q by contracting 2Q with 1/(r-N-1); for checks.
Eigen::MatrixXd contract_q2(const Eigen::MatrixXd& q2, int rank, int n_particles);

enum class ReconstructMode { nearest, energy_min };

struct ReconstructOptions {
  ReconstructMode mode = ReconstructMode::nearest;
  double tol = 1e-9;
  int max_sweeps = 5000;
  double psd_tol = 1e-8;
  int energy_iterations = 200;
};

struct ReconstructReport {
  PositivityBundle::MinEigenvalues before{};
  PositivityBundle::MinEigenvalues after{};
  double trace_residual = 0.0;
  double relation_residual = 0.0;    // Q and G against their linear maps of D
  double contraction_residual = 0.0;  // 1Q from 2Q against I - 1D
  int iterations = 0;
  bool converged = false;
  double mixing = 0.0;  // weight of the maximally mixed 2-RDM added at the end
  double displacement = 0.0;
};

struct Reconstruction {
  rdm::RealRdm d2;
  rdm::RealRdm d1;
  ReconstructReport report;
};

/// Nearest N-representable 2-RDM under 2-positivity (D, Q, G), or the
/// energy minimizer over the same set when `h` is given and the mode asks
/// for it.
Reconstruction reconstruct_rdm(const rdm::RealRdm& d2_measured, int n_particles, const ReconstructOptions& opt = {},
                               const integrals::ActiveHamiltonian* h = nullptr);

/// Mitigation record for one RDM.
struct MitigationReport {
  double retained_fraction = 1.0;
  std::optional<ReconstructReport> reconstruction;
};

nlohmann::json to_json(const ReconstructReport& r);
nlohmann::json to_json(const MitigationReport& r);

}  // namespace ptvqe::mitigate
