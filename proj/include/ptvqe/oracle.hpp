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

// Exact diagonalization in a determinant basis.
#pragma once

#include <functional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "ptvqe/fermion.hpp"
#include "ptvqe/integrals.hpp"
#include "ptvqe/qsim.hpp"

namespace ptvqe::oracle {

class OracleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Sorted determinant list with index lookup.
class DeterminantSpace {
 public:
  DeterminantSpace() = default;
  explicit DeterminantSpace(std::vector<Det> dets);

  /// All determinants over n spatial orbitals with fixed alpha/beta counts.
  static DeterminantSpace sector(int n_orbitals, int n_alpha, int n_beta);

  std::size_t size() const { return dets_.size(); }
  const std::vector<Det>& dets() const { return dets_; }
  Det operator[](std::size_t k) const { return dets_[k]; }
  /// Position of d, or -1 when absent.
  long index(Det d) const;

 private:
  std::vector<Det> dets_;
};

/// Slater-Condon Hamiltonian over the given determinants (integrals indexed
/// by spatial orbital, spin orbital 2p+s).  Includes the core constant.
Eigen::SparseMatrix<double> ci_hamiltonian(const integrals::IntegralSet& ints, const DeterminantSpace& space);

struct CiResult {
  double energy = 0.0;
  Eigen::VectorXd ground_vector;
  DeterminantSpace space;
  double residual = 0.0;
};

struct DavidsonOptions {
  double tol = 1e-10;
  int max_iter = 400;
  int max_subspace = 48;
};

/// Lowest eigenpair of a real symmetric operator.  Dense below
/// `dense_limit`, Davidson otherwise.
std::pair<double, Eigen::VectorXd> lowest_eigenpair(const Eigen::SparseMatrix<double>& h,
                                                    const DavidsonOptions& opt = {}, Eigen::Index dense_limit = 1500);

CiResult casci(const integrals::IntegralSet& ints, int n_electrons, int ms2, std::size_t max_dim = 2000000);
CiResult casci(const integrals::ActiveHamiltonian& h, int n_electrons, int ms2, std::size_t max_dim = 2000000);

/// Lowest eigenvalue of a qubit Hamiltonian in the n_electrons sector.
double fci_sector_check(const qsim::PauliSum& h, int n_electrons);

}  // namespace ptvqe::oracle
