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

// Electronic integrals: FCIDUMP I/O, orbital partitions and core folding.
#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ptvqe/fermion.hpp"

namespace ptvqe::integrals {

class FcidumpError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class PartitionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Two-electron integrals in chemist notation, stored fully expanded.
class Eri {
 public:
  Eri() = default;
  explicit Eri(int n) : n_(n), v_(static_cast<std::size_t>(n) * n * n * n, 0.0) {}

  int size() const { return n_; }
  double operator()(int p, int q, int r, int s) const { return v_[index(p, q, r, s)]; }
  /// Writes all eight symmetry-equivalent positions.
  void set(int p, int q, int r, int s, double value);

  const std::vector<double>& raw() const { return v_; }

 private:
  std::size_t index(int p, int q, int r, int s) const {
    return ((static_cast<std::size_t>(p) * n_ + q) * n_ + r) * n_ + s;
  }
  int n_ = 0;
  std::vector<double> v_;
};

struct IntegralSet {
  int n_orbitals = 0;
  int n_electrons = 0;
  int ms2 = 0;
  Eigen::MatrixXd h1;
  Eri h2;
  double core = 0.0;
  std::vector<int> orbsym;
  int isym = 1;
};

struct OrbitalPartition {
  std::vector<int> frozen;
  std::vector<int> inactive;
  std::vector<int> active;
  std::vector<int> virtual_;

  int n_orbitals() const {
    return static_cast<int>(frozen.size() + inactive.size() + active.size() + virtual_.size());
  }
};

/// Core-folded Hamiltonian over the active orbitals (indexed 0..n_active-1).
struct ActiveHamiltonian {
  double e_core = 0.0;
  Eigen::MatrixXd f1;
  Eri v2;
  int n_electrons = 0;

  int n_orbitals() const { return static_cast<int>(f1.rows()); }
};

IntegralSet parse_fcidump(std::istream& in);
IntegralSet read_fcidump(const std::string& path);
void write_fcidump(const IntegralSet& ints, std::ostream& out);

OrbitalPartition partition_orbitals(int n_orbitals, const std::vector<int>& frozen,
                                    const std::vector<int>& inactive, const std::vector<int>& active);

/// Folds doubly occupied `core` orbitals into a constant and an effective
/// one-body term over `keep`; the result is renumbered to keep's order.
IntegralSet fold_orbitals(const IntegralSet& ints, const std::vector<int>& core, const std::vector<int>& keep);

ActiveHamiltonian fold_core(const IntegralSet& ints, const OrbitalPartition& part);

/// The active Hamiltonian as a standalone integral set (core = e_core).
IntegralSet to_integral_set(const ActiveHamiltonian& h);

/// Spin-orbital Hamiltonian
///   H = C + sum_pq h_pq a+_p a_q + sum_{p<q, r<s} <pq||rs> a+_p a+_q a_s a_r
/// with <pq|rs> = (pr|qs) delta(spins).  In the 1/2 sum h_pqrs a+_p a+_q a_r a_s
/// form this is h_pqrs = (ps|qr).
FermionOperator spin_orbital_terms(const ActiveHamiltonian& h, double tol = 0.0);
FermionOperator spin_orbital_terms(const IntegralSet& ints, double tol = 0.0);

/// Antisymmetrized spin-orbital integral <pq||rs>.
double antisym(const Eri& g, int p, int q, int r, int s);

}  // namespace ptvqe::integrals
