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
// Reduced density matrices of order k with the 1/k! normalization
//
//   D^{p1..pk}_{q1..qk} = (1/k!) <a+_p1 .. a+_pk a_qk .. a_q1>.
//
// Only sorted index tuples are stored: rows and columns run over the
// k-subsets of the spin orbitals, ordered by their occupation mask.
#pragma once

#include <iosfwd>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ptvqe/fermion.hpp"
#include "ptvqe/integrals.hpp"
#include "ptvqe/qsim.hpp"

namespace ptvqe::rdm {

class RdmError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Position of a k-subset among all k-subsets of {0..n-1} sorted by mask.
inline Eigen::Index subset_rank(Det mask) {
  Eigen::Index r = 0;
  int i = 0;
  while (mask) {
    const int p = std::countr_zero(mask);
    r += static_cast<Eigen::Index>(binomial(p, i + 1));
    mask &= mask - 1;
    ++i;
  }
  return r;
}

/// Sign of the permutation sorting `idx`; 0 when an index repeats.
int sort_sign(std::vector<int>& idx);

template <class Scalar>
class Rdm {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  Rdm() = default;
  Rdm(int order, int n_spin_orbitals);

  int order() const { return k_; }
  int n() const { return n_; }
  Eigen::Index dim() const { return m_.rows(); }
  /// Subset masks in storage order.
  const std::vector<Det>& subsets() const { return subsets_; }

  Matrix& matrix() { return m_; }
  const Matrix& matrix() const { return m_; }
  Scalar& at(Det upper, Det lower) { return m_(subset_rank(upper), subset_rank(lower)); }
  Scalar at(Det upper, Det lower) const { return m_(subset_rank(upper), subset_rank(lower)); }

  /// Element for arbitrary index order; antisymmetry supplies the sign.
  Scalar operator()(std::vector<int> upper, std::vector<int> lower) const;

  /// Sum over all ordered index tuples, C(N, k) for an N-particle state.
  Scalar trace() const;
  /// Set when the order exceeds the particle number of the source state.
  bool beyond_particle_number = false;

 private:
  int k_ = 0;
  int n_ = 0;
  std::vector<Det> subsets_;
  Matrix m_;
};

using RealRdm = Rdm<double>;
using ComplexRdm = Rdm<Complex>;

/// Exact k-RDM of a state given as amplitudes over explicit determinants.
template <class Scalar>
Rdm<Scalar> compute_rdm(const std::vector<Det>& dets, const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& amps, int n,
                        int k);
ComplexRdm compute_rdm(const qsim::Statevector& state, int k);

/// (k-1)-RDM from the k-RDM of an N-particle state.
template <class Scalar>
Rdm<Scalar> contract(const Rdm<Scalar>& d, double n_particles);

/// Grassmann wedge product normalized so that 2D = 1D ^ 1D for a single
/// determinant.
template <class Scalar>
Rdm<Scalar> wedge(const Rdm<Scalar>& a, const Rdm<Scalar>& b);

/// 2-particle cumulant 2D - 1D ^ 1D.
template <class Scalar>
Rdm<Scalar> cumulant_2rdm(const Rdm<Scalar>& d1, const Rdm<Scalar>& d2);

/// 3D ~ 3 (2Delta ^ 1D) + 1D ^ 1D ^ 1D.
template <class Scalar>
Rdm<Scalar> cumulant_3rdm(const Rdm<Scalar>& d1, const Rdm<Scalar>& d2);

RealRdm real_part(const ComplexRdm& d);
ComplexRdm to_complex(const RealRdm& d);

/// Energy of an active Hamiltonian from its 1- and 2-RDM (includes e_core).
double rdm_energy(const integrals::ActiveHamiltonian& h, const RealRdm& d1, const RealRdm& d2);

/// Pauli decomposition of the stored upper-triangular RDM elements.
struct RdmPauliTerms {
  int order = 0;
  int n_qubits = 0;
  std::vector<qsim::PauliString> strings;  // distinct, phase-free
  struct Element {
    Eigen::Index row, col;
    std::vector<std::pair<std::size_t, Complex>> parts;  // (string, weight)
  };
  std::vector<Element> elements;
};

RdmPauliTerms rdm_pauli_terms(int k, int n_qubits);

/// Qubit-wise commuting measurement groups.
struct MeasurementPlan {
  struct Group {
    std::string basis;                 // per-qubit letter, qubit 0 first
    std::vector<std::size_t> members;  // indices into strings
  };
  std::vector<qsim::PauliString> strings;
  std::vector<Group> groups;
  std::uint64_t shots_per_group = 0;

  /// Group index of every string.
  std::vector<std::size_t> group_of() const;
};

/// Greedy largest-degree-first coloring of the QWC conflict graph.
MeasurementPlan group_qwc(const std::vector<qsim::PauliString>& strings, std::uint64_t shots_per_group = 0);

/// Parity average of a diagonal-in-basis string over measured counts.
double parity_expectation(const qsim::Counts& counts, const qsim::PauliString& p);

/// String expectations from per-group counts.
std::vector<double> string_expectations(const MeasurementPlan& plan, const std::vector<qsim::Counts>& counts);

/// RDM from string expectations (aligned with terms.strings), hermitized.
ComplexRdm assemble_rdm(const RdmPauliTerms& terms, const std::vector<double>& values);
ComplexRdm estimate_rdm(const RdmPauliTerms& terms, const MeasurementPlan& plan, const std::vector<qsim::Counts>& counts);

/// Plain-text dump "k p.. q.. re im" of stored elements above `tol`, and a
/// JSON manifest with order, register size and trace.
void export_rdm(const ComplexRdm& d, std::ostream& data, std::ostream& manifest, double tol = 0.0);
ComplexRdm import_rdm(std::istream& data, int order, int n);

}  // namespace ptvqe::rdm
