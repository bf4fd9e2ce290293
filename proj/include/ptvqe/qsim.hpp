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

// Statevector simulation of a qubit register under the Jordan-Wigner map.
//
// Qubit q holds spin orbital q; basis index bit q is the occupation of
// qubit q.  Bitstrings print qubit 0 first.
#pragma once

#include <functional>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "ptvqe/fermion.hpp"

namespace ptvqe::qsim {

class QsimError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Pauli string i^phase * prod_q sigma_q.  Letter of qubit q is encoded
/// symplectically: I=(0,0) X=(1,0) Z=(0,1) Y=(1,1) in bits of (x, z).
struct PauliString {
  int n_qubits = 0;
  Det x = 0;
  Det z = 0;
  int phase = 0;  // power of i, 0..3

  static PauliString identity(int n) { return {n, 0, 0, 0}; }
  /// Parses letters, qubit 0 first, e.g. "XXXY".  Optional leading sign
  /// ("-", "i", "-i") sets the phase.
  static PauliString parse(const std::string& text);
  static PauliString single(int n, int q, char letter);

  char letter(int q) const;
  std::string letters() const;
  Det support() const { return x | z; }
  bool is_identity() const { return (x | z) == 0; }
  int weight() const { return popcount(x | z); }
  Complex phase_factor() const;

  friend bool operator==(const PauliString& a, const PauliString& b) {
    return a.n_qubits == b.n_qubits && a.x == b.x && a.z == b.z && a.phase == b.phase;
  }
};

PauliString operator*(const PauliString& a, const PauliString& b);
bool commute(const PauliString& a, const PauliString& b);
bool qubitwise_commute(const PauliString& a, const PauliString& b);

/// Sum of Hermitian Pauli letters with complex weights (phases folded in).
class PauliSum {
 public:
  using Key = std::pair<Det, Det>;

  PauliSum() = default;
  explicit PauliSum(int n_qubits) : n_(n_qubits) {}
  PauliSum(const PauliString& p, Complex c = 1.0);

  int n_qubits() const { return n_; }
  const std::map<Key, Complex>& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }
  bool empty() const { return terms_.empty(); }

  void add(const PauliString& p, Complex c);
  Complex coefficient(const PauliString& p) const;
  PauliString string_of(const Key& k) const { return {n_, k.first, k.second, 0}; }

  PauliSum& operator+=(const PauliSum& o);
  PauliSum& operator-=(const PauliSum& o);
  PauliSum& operator*=(Complex c);
  friend PauliSum operator+(PauliSum a, const PauliSum& b) { return a += b; }
  friend PauliSum operator-(PauliSum a, const PauliSum& b) { return a -= b; }
  friend PauliSum operator*(PauliSum a, Complex c) { return a *= c; }
  friend PauliSum operator*(Complex c, PauliSum a) { return a *= c; }
  friend PauliSum operator*(const PauliSum& a, const PauliSum& b);

  PauliSum adjoint() const;
  void prune(double tol = 1e-14);
  bool is_hermitian(double tol = 1e-12) const;
  bool is_antihermitian(double tol = 1e-12) const;
  double one_norm() const;

 private:
  int n_ = 0;
  std::map<Key, Complex> terms_;
};

/// a+_p -> (X_p - iY_p)/2 Z_{<p},  a_p -> (X_p + iY_p)/2 Z_{<p}.
PauliSum jw_map(const FermionOperator& op, int n_qubits);
PauliSum jw_ladder(const Ladder& l, int n_qubits);

struct Statevector {
  int n_qubits = 0;
  Eigen::VectorXcd amp;

  Statevector() = default;
  explicit Statevector(int n) : n_qubits(n), amp(Eigen::VectorXcd::Zero(Eigen::Index{1} << n)) {}

  Eigen::Index dim() const { return amp.size(); }
  double norm() const { return amp.norm(); }
};

Statevector prepare_reference(int n_qubits, const std::vector<int>& occupied);

/// y = P |v> for a single string (phase included).
void apply_pauli(const PauliString& p, const Eigen::VectorXcd& v, Eigen::VectorXcd& y, Complex scale = 1.0);
Eigen::VectorXcd apply_pauli_sum(const PauliSum& op, const Eigen::VectorXcd& v);

/// exp(theta * G)|psi> by scaled Taylor series; G must be anti-Hermitian.
Statevector apply_exp_generator(const Statevector& state, const PauliSum& generator, double theta);

/// Dense matrix of a PauliSum (small registers; testing and oracles).
Eigen::MatrixXcd dense_matrix(const PauliSum& op);

double expectation(const Statevector& state, const PauliSum& op);
Complex pauli_expectation(const Statevector& state, const PauliString& p);

/// Fermionic operator applied to an amplitude vector over 2^n basis states.
Eigen::VectorXcd apply_fermion(const FermionOperator& op, const Eigen::VectorXcd& v);

/// Real fermionic operator as a sparse matrix on `basis` (sorted list of
/// determinants); images leaving the basis are dropped.
Eigen::SparseMatrix<double> fermion_matrix(const FermionOperator& op, const std::vector<Det>& basis,
                                           bool include_constant = true);
std::vector<Det> full_basis(int n_qubits);
std::vector<Det> number_sector(int n_qubits, int n_particles);

void apply_cnot(Statevector& s, int control, int target);
void apply_hadamard(Statevector& s, int q);
void apply_sdg(Statevector& s, int q);

struct NoiseModel {
  double depol_p = 0.0;
  double readout_p01 = 0.0;
  double readout_p10 = 0.0;

  bool noiseless() const { return depol_p == 0.0 && readout_p01 == 0.0 && readout_p10 == 0.0; }
  void validate() const;
};

/// Circuit as a start state plus unitary layers; depolarizing errors are
/// inserted after each layer.
struct LayeredCircuit {
  Statevector initial;
  std::vector<std::function<void(Statevector&)>> layers;

  Statevector run() const;
};

using Counts = std::map<Det, std::uint64_t>;

std::string bitstring(Det b, int n_qubits);

/// Rotates into the measurement basis given per-qubit letters (X, Y or Z).
void rotate_to_basis(Statevector& s, const std::string& basis);

Counts sample_counts(const LayeredCircuit& circuit, const std::string& basis, std::uint64_t shots,
                     const NoiseModel& noise, std::mt19937_64& rng);
/// Treats `state` as the output of a single layer.
Counts sample_counts(const Statevector& state, const std::string& basis, std::uint64_t shots,
                     const NoiseModel& noise, std::mt19937_64& rng);

}  // namespace ptvqe::qsim
