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
// ADAPT-VQE over the active register and the fixed two-orbital ansatz.
//
// States are simulated inside a fixed (N, m_s) determinant sector, where
// every pool generator is real antisymmetric and splits into independent
// 2x2 rotations.  Full-register statevectors are assembled on output.
#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "ptvqe/fermion.hpp"
#include "ptvqe/integrals.hpp"
#include "ptvqe/optimize.hpp"
#include "ptvqe/oracle.hpp"
#include "ptvqe/qsim.hpp"

namespace ptvqe::vqe {

class VqeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class PoolKind { Single, Double, Pauli };

/// tau = T - T^dagger for a fermionic excitation T, or a bare anti-Hermitian
/// Pauli generator.
struct PoolOperator {
  PoolKind kind = PoolKind::Single;
  std::vector<int> indices;  // (u, v) or (u, v, w, x) over spin orbitals
  FermionTerm excitation;    // T; empty for Pauli generators
  qsim::PauliSum generator;  // JW image of tau

  std::string label() const;
};

/// Singles a+_u a_v (u > v) and doubles a+_u a+_v a_w a_x (u < v, w < x,
/// (u,v) > (w,x), disjoint), all conserving m_s.
std::vector<PoolOperator> build_pool(int n_spin_orbitals);
std::vector<PoolOperator> build_pool(const integrals::OrbitalPartition& part);

/// exp(-i theta/2 X0 X1 X2 Y3) generator as a pool entry.
PoolOperator f2_generator();

/// Hamiltonian restricted to a fixed (N, m_s) sector; `matrix` excludes
/// e_core.
struct Sector {
  int n_qubits = 0;
  int n_electrons = 0;
  int ms2 = 0;
  oracle::DeterminantSpace space;
  Eigen::SparseMatrix<double> matrix;
  double e_core = 0.0;

  Eigen::Index dim() const { return static_cast<Eigen::Index>(space.size()); }
};

Sector make_sector(const integrals::ActiveHamiltonian& h, int ms2 = 0);
/// Builds the sector matrix from a qubit Hamiltonian (strings with an odd
/// number of Y letters must cancel).
Sector make_sector(const qsim::PauliSum& h, double e_core, int n_electrons, int ms2 = 0);

/// Sector action of one generator: tau e_i = s e_j, tau e_j = -s e_i.
class SectorGenerator {
 public:
  struct Pair {
    Eigen::Index i, j;
    double s;
  };

  SectorGenerator() = default;
  SectorGenerator(const PoolOperator& op, const oracle::DeterminantSpace& space);

  const std::vector<Pair>& pairs() const { return pairs_; }
  /// v <- exp(theta tau) v
  void rotate(Eigen::VectorXd& v, double theta) const;
  /// <a| tau |b>
  double bracket(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const;

 private:
  std::vector<Pair> pairs_;
};

/// Occupied spin orbitals of the aufbau reference in the given sector.
std::vector<int> reference_occupation(int n_electrons, int ms2);

/// Ordered product of exponentials acting on a reference determinant; the
/// first entry acts first.
struct Ansatz {
  int n_qubits = 0;
  std::vector<int> occupied;
  std::vector<PoolOperator> ops;
  std::vector<double> theta;
  std::vector<std::size_t> pool_index;  // position in the pool, when known

  std::size_t size() const { return ops.size(); }
  /// Full-register state through qsim::apply_exp_generator.
  qsim::Statevector prepare() const;
};

/// One-parameter two-orbital ansatz on |1100>.
Ansatz fixed_ansatz_f2(double theta);

enum class F2Convention { Paired, Simplified };

/// |1100> -> exp(-i theta/2 XXXY), or the reduced circuit
/// |1000> -> exp(-i theta/2 X0 Y2) -> CNOT(0,1) CNOT(2,3).
qsim::Statevector prepare_f2(double theta, F2Convention conv);
/// Same, as a one-layer circuit for noisy sampling.
qsim::LayeredCircuit f2_circuit(double theta, F2Convention conv);

struct AdaptRecord {
  int iteration = 0;
  std::size_t chosen = 0;
  std::string label;
  double energy = 0.0;
  double max_gradient = 0.0;
};

struct VqeResult {
  Ansatz ansatz;
  double energy = 0.0;  // includes e_core
  double final_gradient_norm = 0.0;
  qsim::Statevector state;
  Eigen::VectorXd sector_state;
  std::vector<double> energies;  // after each macro-iteration, first = reference
  std::vector<AdaptRecord> trace;
  bool gradient_converged = false;
  bool optimizer_converged = true;
};

struct AdaptOptions {
  double eps_grad = 1e-6;
  int max_ops = 400;
  BfgsOptions bfgs{};
  double tie_tol = 1e-10;
  std::function<void(const AdaptRecord&)> on_iteration;
};

/// Sector amplitudes of an ansatz.
Eigen::VectorXd sector_state(const Sector& sector, const Ansatz& ansatz);
/// Full-register embedding of sector amplitudes.
qsim::Statevector embed(const Sector& sector, const Eigen::VectorXd& v);

/// dE/dtheta_k for every pool operator appended at theta = 0, i.e.
/// <psi|[H, tau_k]|psi>.
std::vector<double> pool_gradients(const Sector& sector, const Eigen::VectorXd& state,
                                   const std::vector<PoolOperator>& pool);
std::vector<double> pool_gradients(const Sector& sector, const Eigen::VectorXd& state,
                                   const std::vector<SectorGenerator>& pool);

/// Energy (with e_core) and analytic parameter gradient of an ansatz.
double ansatz_energy(const Sector& sector, const Ansatz& ansatz, Eigen::VectorXd* grad = nullptr);

/// Optimizes all parameters of `ansatz` in place.
VqeResult optimize_ansatz(const Sector& sector, Ansatz ansatz, const BfgsOptions& opt = {});

VqeResult adapt_vqe(const Sector& sector, const std::vector<PoolOperator>& pool, const AdaptOptions& opt = {});

}  // namespace ptvqe::vqe
