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

// Perturbative correction around an active-space reference.
//
// The perturbative register holds the inactive, active and virtual orbitals
// in that order (frozen orbitals are folded into the constant).  The
// reference is |inactive doubly occupied> x |psi_act> x |virtual empty>.
#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "ptvqe/fermion.hpp"
#include "ptvqe/integrals.hpp"
#include "ptvqe/rdm.hpp"

namespace ptvqe::perturb {

class PerturbError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MissingRdmOrder : public PerturbError {
 public:
  using PerturbError::PerturbError;
};

class IntruderError : public PerturbError {
 public:
  using PerturbError::PerturbError;
};

// Enumerators follow the index pattern lower -> upper: i_u is r_i^u.
enum class ExcitationClass { i_u, i_a, u_a, ij_uv, ij_ab, uv_ab, wi_uv, vi_au, vw_au, ij_au, ui_ab, v_u, wx_uv };
enum class AdaptType { none, type1, type2 };
enum class HermitianForm { plain, anti_hermitian };

std::string to_string(ExcitationClass c);
bool is_active_only(ExcitationClass c);

/// r = E (plain) or E - E^+ with E = E^p_q or E^{pq}_{rs}; indices are
/// original orbital labels.
struct ExcitationOp {
  ExcitationClass cls = ExcitationClass::i_u;
  std::array<int, 2> upper{-1, -1};
  std::array<int, 2> lower{-1, -1};
  AdaptType type = AdaptType::none;
  HermitianForm form = HermitianForm::plain;

  bool is_double() const { return type != AdaptType::none; }
  std::string label() const;
  friend bool operator==(const ExcitationOp&, const ExcitationOp&) = default;
};

std::vector<ExcitationOp> enumerate_excitations(const integrals::OrbitalPartition& part, bool restrict_3rdm);

struct PtSpace {
  integrals::OrbitalPartition partition;
  integrals::IntegralSet ints;       // perturbative register, frozen folded into core
  std::vector<int> orbitals;         // register spatial index -> original label
  int n_inactive = 0;
  int n_active = 0;
  int n_virtual = 0;
  FermionOperator hamiltonian;

  int n_spin() const { return 2 * static_cast<int>(orbitals.size()); }
  int active_offset() const { return 2 * n_inactive; }
  /// Register spatial index of an original orbital label.
  int register_orbital(int original) const;
  Det inactive_mask() const;
  Det active_mask() const;
};

PtSpace make_pt_space(const integrals::IntegralSet& ints, const integrals::OrbitalPartition& part);

/// Spin-adapted operator in the perturbative register.
FermionOperator excitation_operator(const ExcitationOp& e, const PtSpace& space);

/// Active-space state, determinants over the 2 * n_active register.
struct Reference {
  int n_electrons = 0;
  std::vector<Det> dets;
  Eigen::VectorXd amps;
  double e_vqe = 0.0;
};

/// Embeds the reference into the perturbative register.
std::vector<std::pair<Det, double>> embed_reference(const PtSpace& space, const Reference& ref);

/// Active RDMs with read counters.  Orders above the particle number read as
/// zero without touching storage; a missing order at or below it throws.
class RdmSet {
 public:
  RdmSet() = default;
  RdmSet(int n_spin, int n_particles) : n_spin_(n_spin), n_particles_(n_particles) {}

  static RdmSet from_reference(const Reference& ref, int n_spin, int max_order);

  void set(rdm::RealRdm d);
  bool has(int k) const;
  const rdm::RealRdm& get(int k) const;
  int n_spin() const { return n_spin_; }
  int n_particles() const { return n_particles_; }

  /// <a+_upper a_lower> with ascending creators and descending annihilators.
  double expectation(Det upper, Det lower) const;

  long reads(int k) const { return k < static_cast<int>(reads_.size()) ? reads_[k] : 0; }
  int max_order_read() const;
  void reset_counters() const { reads_.fill(0); }

 private:
  int n_spin_ = 0;
  int n_particles_ = 0;
  std::vector<std::optional<rdm::RealRdm>> d_;
  mutable std::array<long, 8> reads_{};
};

/// Wick reduction of reference brackets onto active RDMs.
class ContractionEngine {
 public:
  ContractionEngine(const PtSpace& space, const RdmSet& rdms);

  /// <Psi0| L^+ M R |Psi0> for arbitrary operators in the register.
  double bracket(const FermionOperator& left, const FermionOperator& middle, const FermionOperator& right) const;
  /// <Psi0| r_mu^+ H r_nu |Psi0>; an empty optional is the identity.
  double matrix_element(const std::optional<ExcitationOp>& mu, const std::optional<ExcitationOp>& nu) const;
  double energy() const;

  Eigen::MatrixXd overlap_matrix(const std::vector<FermionOperator>& ops) const;
  /// <Psi_bar_mu| H |Psi0>.
  Eigen::VectorXd couplings(const std::vector<FermionOperator>& ops) const;
  /// <Psi_bar_mu|Psi0>.
  Eigen::VectorXd reference_overlaps(const std::vector<FermionOperator>& ops) const;
  /// Full <Psi_bar_mu|H|Psi_bar_nu>; needs RDMs up to min(N, 6).
  Eigen::MatrixXd hamiltonian_matrix(const std::vector<FermionOperator>& ops) const;

 private:
  const PtSpace& space_;
  const RdmSet& rdms_;
};

/// Explicit application on the full register; the verification oracle.
double brute_bracket(const PtSpace& space, const Reference& ref, const FermionOperator& left,
                     const FermionOperator& middle, const FermionOperator& right);
double brute_matrix_element(const PtSpace& space, const Reference& ref, const std::optional<ExcitationOp>& mu,
                            const std::optional<ExcitationOp>& nu);

/// Active density as a weighted sum of pure states over `dets`.
struct ActiveDensity {
  int n_electrons = 0;
  std::vector<Det> dets;
  std::vector<double> weights;
  std::vector<Eigen::VectorXd> states;
};

ActiveDensity pure_density(const Reference& ref);
/// Rebuilds rho from the N-RDM of an N-particle state.
ActiveDensity density_from_rdm(const rdm::RealRdm& d, int n_electrons);

/// <Psi_bar_mu|H|Psi_bar_nu> with the active density embedded in the full
/// determinant space.
Eigen::MatrixXd density_hamiltonian(const PtSpace& space, const ActiveDensity& rho,
                                    const std::vector<FermionOperator>& ops);

enum class OrthoMode { lowdin, canonical };

struct Orthonormalization {
  Eigen::MatrixXd X;            // K x K'
  std::vector<int> kept;        // excitations spanning the retained space
  std::vector<int> dropped;
  std::vector<int> column_label;  // excitation attached to each column
  int dropped_directions = 0;
};

Orthonormalization orthonormalize(const Eigen::MatrixXd& S, double delta = 1e-8, OrthoMode mode = OrthoMode::lowdin);

enum class HbarRoute { density, engine };

struct PtOptions {
  OrthoMode ortho = OrthoMode::lowdin;
  double delta = 1e-8;
  double intruder_tol = 1e-8;
  double negligible_numerator = 1e-12;
  HbarRoute hbar = HbarRoute::density;
  bool raw_diagonal = false;  // E_mu from S-normalized raw vectors instead of X
};

struct Subspace {
  std::vector<ExcitationOp> excitations;
  Eigen::MatrixXd S;
  Eigen::MatrixXd X;
  Eigen::MatrixXd H;               // (K'+1)^2 orthonormal basis, reference first
  Eigen::VectorXd overlap;         // <Psi_mu|Psi0> in the orthonormal basis, reference first
  Eigen::VectorXd raw_diagonal;    // <Psi_bar|H|Psi_bar> / <Psi_bar|Psi_bar> per column label
  std::vector<int> column_label;
  std::vector<int> dropped;
  int rdm_order_used = 0;
  std::array<long, 8> rdm_reads{};
};

Subspace build_subspace(const PtSpace& space, const RdmSet& rdms, const ActiveDensity& rho, double e_vqe,
                        const std::vector<ExcitationOp>& excitations, const PtOptions& opt = {});

struct PtTerm {
  ExcitationOp excitation;
  double numerator = 0.0;
  double denominator = 0.0;
  double w = 0.0;
  bool skipped = false;
};

struct PtReport {
  double e_vqe = 0.0;
  std::vector<PtTerm> terms;
  double e1 = 0.0;
  double e2 = 0.0;
  double e0 = 0.0;
  int rdm_order_used = 0;
  std::array<long, 8> rdm_reads{};
  std::vector<ExcitationOp> dropped;
  std::vector<ExcitationOp> skipped;
};

PtReport pt2(const Subspace& sub, const PtOptions& opt = {});

std::vector<ExcitationOp> screen(const PtReport& report, double threshold);

struct SubspaceSolution {
  double e0 = 0.0;
  Eigen::VectorXd d;
};

SubspaceSolution subspace_solve(const Subspace& sub);

nlohmann::json to_json(const ExcitationOp& e);
nlohmann::json to_json(const PtReport& r);

}  // namespace ptvqe::perturb
