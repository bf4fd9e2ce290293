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

#include <cmath>
#include <random>

#include <gtest/gtest.h>
#include <unsupported/Eigen/MatrixFunctions>

#include "ptvqe/integrals.hpp"
#include "ptvqe/oracle.hpp"
#include "ptvqe/qsim.hpp"
#include "support.hpp"

using namespace ptvqe;
using namespace ptvqe::qsim;

namespace {

FermionOperator single_term(Complex c, std::vector<Ladder> ops) {
  FermionOperator f;
  f.terms.push_back({c, std::move(ops)});
  return f;
}

Statevector random_state(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Statevector s(n);
  for (Eigen::Index k = 0; k < s.dim(); ++k) s.amp[k] = {g(rng), g(rng)};
  s.amp.normalize();
  return s;
}

}  // namespace

TEST(PauliString, ProductsAndPhases) {
  auto x = PauliString::parse("X"), y = PauliString::parse("Y"), z = PauliString::parse("Z");
  EXPECT_EQ(x * y, PauliString::parse("iZ"));
  EXPECT_EQ(y * x, PauliString::parse("-iZ"));
  EXPECT_EQ(y * z, PauliString::parse("iX"));
  EXPECT_EQ(z * x, PauliString::parse("iY"));
  EXPECT_EQ(x * x, PauliString::parse("I"));
  EXPECT_EQ(PauliString::parse("XXXY").letters(), "XXXY");
  EXPECT_TRUE(qubitwise_commute(PauliString::parse("ZI"), PauliString::parse("ZZ")));
  EXPECT_FALSE(qubitwise_commute(PauliString::parse("XX"), PauliString::parse("YY")));
  EXPECT_TRUE(commute(PauliString::parse("XX"), PauliString::parse("YY")));
}

TEST(JordanWigner, NumberOperator) {
  auto p = jw_map(single_term(1.0, {cre(0), ann(0)}), 2);
  PauliSum expect(PauliString::parse("II"), 0.5);
  expect.add(PauliString::parse("ZI"), -0.5);
  auto d = p - expect;
  d.prune(1e-15);
  EXPECT_TRUE(d.empty());
}

TEST(JordanWigner, Hopping) {
  FermionOperator f;
  f.terms.push_back({1.0, {cre(0), ann(1)}});
  f.terms.push_back({1.0, {cre(1), ann(0)}});
  auto p = jw_map(f, 2);
  PauliSum expect(PauliString::parse("XX"), 0.5);
  expect.add(PauliString::parse("YY"), 0.5);
  auto d = p - expect;
  d.prune(1e-15);
  EXPECT_TRUE(d.empty());
}

TEST(JordanWigner, AnticommutatorsOnRandomPairs) {
  const int n = 6;
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> pick(0, n - 1);
  for (int trial = 0; trial < 20; ++trial) {
    const int p = pick(rng), q = pick(rng);
    auto ap = jw_ladder(ann(p), n), aq_dag = jw_ladder(cre(q), n);
    auto anti = ap * aq_dag + aq_dag * ap;
    anti.prune(1e-15);
    if (p == q) {
      ASSERT_EQ(anti.size(), 1u);
      EXPECT_NEAR(std::abs(anti.coefficient(PauliString::identity(n)) - 1.0), 0.0, 1e-15);
    } else {
      EXPECT_TRUE(anti.empty());
    }
    auto aa = jw_ladder(ann(p), n) * jw_ladder(ann(q), n) + jw_ladder(ann(q), n) * jw_ladder(ann(p), n);
    aa.prune(1e-15);
    EXPECT_TRUE(aa.empty());
  }
}

TEST(JordanWigner, MatchesDirectLadderApplication) {
  std::mt19937_64 rng(3);
  auto s = random_state(5, rng);
  FermionOperator f;
  f.terms.push_back({0.7, {cre(4), cre(1), ann(3), ann(0)}});
  f.terms.push_back({Complex(0.2, -0.1), {cre(2), ann(3)}});
  auto viaPauli = apply_pauli_sum(jw_map(f, 5), s.amp);
  auto direct = apply_fermion(f, s.amp);
  EXPECT_LT((viaPauli - direct).norm(), 1e-14);
}

TEST(JordanWigner, SpectrumPreservedInNumberSector) {
  auto ints = integrals::read_fcidump(fixtures::data_path("hf/hf_1.30.fcidump"));
  auto h = integrals::fold_core(ints, integrals::partition_orbitals(6, {}, {0, 1, 2}, {3, 4, 5}));
  auto op = integrals::spin_orbital_terms(h);
  const auto basis = number_sector(6, 4);
  Eigen::MatrixXd fermionic = Eigen::MatrixXd(fermion_matrix(op, basis));
  Eigen::MatrixXcd q = dense_matrix(jw_map(op, 6));
  Eigen::MatrixXcd qs(basis.size(), basis.size());
  for (std::size_t i = 0; i < basis.size(); ++i)
    for (std::size_t j = 0; j < basis.size(); ++j) qs(i, j) = q(basis[i], basis[j]);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> a(fermionic);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> b(qs);
  EXPECT_LT((a.eigenvalues() - b.eigenvalues()).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Statevector, PrepareReference) {
  auto s = prepare_reference(4, {0, 1});
  EXPECT_EQ(s.amp[0b0011], Complex(1.0));
  EXPECT_EQ(bitstring(0b0011, 4), "1100");
  EXPECT_EQ(prepare_reference(4, {}).amp[0], Complex(1.0));
  EXPECT_EQ(prepare_reference(4, {0}).amp[1], Complex(1.0));
  EXPECT_THROW(prepare_reference(4, {0, 0}), QsimError);
}

TEST(ExpGenerator, ZeroAngleIsIdentity) {
  auto s = prepare_reference(4, {0, 1});
  PauliSum g(PauliString::parse("XXXY"), Complex(0.0, -0.5));
  auto out = apply_exp_generator(s, g, 0.0);
  EXPECT_EQ((out.amp - s.amp).norm(), 0.0);
}

TEST(ExpGenerator, OneParameterPairRotation) {
  const double theta = 0.37;
  PauliSum g(PauliString::parse("XXXY"), Complex(0.0, -0.5));
  auto s = apply_exp_generator(prepare_reference(4, {0, 1}), g, theta);
  EXPECT_NEAR(std::abs(s.amp[0b0011] - std::cos(theta / 2)), 0.0, 1e-13);
  EXPECT_NEAR(std::abs(s.amp[0b1100] - std::sin(theta / 2)), 0.0, 1e-13);
  auto flip = apply_exp_generator(prepare_reference(4, {0, 1}), g, M_PI);
  EXPECT_NEAR(std::abs(flip.amp[0b1100]), 1.0, 1e-13);
  // the |1000> start of the pair: Y on qubit 3 flips it, so the partner is |0111>
  auto t = apply_exp_generator(prepare_reference(4, {0}), g, theta);
  EXPECT_NEAR(std::abs(t.amp[0b0001]), std::cos(theta / 2), 1e-13);
  EXPECT_NEAR(std::abs(t.amp[0b1110]), std::sin(theta / 2), 1e-13);
}

TEST(ExpGenerator, MatchesDenseExponential) {
  std::mt19937_64 rng(11);
  const int n = 6;
  FermionOperator t;
  t.terms.push_back({1.0, {cre(4), cre(5), ann(1), ann(0)}});
  FermionOperator tau = t;
  for (auto& term : t.adjoint().terms) tau.terms.push_back({-term.coeff, term.ops});
  auto g = jw_map(tau, n);
  auto s = random_state(n, rng);
  auto out = apply_exp_generator(s, g, 0.3);
  Eigen::MatrixXcd u = (0.3 * dense_matrix(g)).exp();
  EXPECT_LT((u * s.amp - out.amp).norm(), 1e-10);
}

TEST(ExpGenerator, NormPreservedOverManyApplications) {
  std::mt19937_64 rng(5);
  auto s = random_state(6, rng);
  PauliSum g(PauliString::parse("XYZIXY"), Complex(0.0, 0.8));
  g.add(PauliString::parse("ZZIYII"), Complex(0.0, -0.3));
  for (int k = 0; k < 100; ++k) s = apply_exp_generator(s, g, 0.9);
  EXPECT_LT(std::abs(s.norm() - 1.0), 1e-12);
}

TEST(ExpGenerator, RejectsHermitianGenerator) {
  PauliSum g(PauliString::parse("XX"), 1.0);
  EXPECT_THROW(apply_exp_generator(prepare_reference(2, {0}), g, 0.1), QsimError);
}

TEST(Expectation, Basics) {
  auto zero = prepare_reference(3, {});
  EXPECT_DOUBLE_EQ(expectation(zero, PauliSum(PauliString::parse("ZII"), 1.0)), 1.0);
  EXPECT_DOUBLE_EQ(expectation(zero, PauliSum(PauliString::identity(3), 2.5)), 2.5);
  EXPECT_THROW(expectation(zero, PauliSum(PauliString::parse("ZII"), Complex(0, 1))), QsimError);
  std::mt19937_64 rng(1);
  auto s = random_state(3, rng);
  PauliSum h(PauliString::parse("XYZ"), 0.4);
  h.add(PauliString::parse("ZZI"), -1.1);
  auto with_zero = h + PauliSum(3);
  EXPECT_DOUBLE_EQ(expectation(s, h), expectation(s, with_zero));
}

TEST(Expectation, HartreeFockEnergy) {
  auto ints = integrals::read_fcidump(fixtures::data_path("hf/hf_0.90.fcidump"));
  auto h = integrals::fold_core(ints, integrals::partition_orbitals(6, {}, {0, 1, 2}, {3, 4, 5}));
  auto q = jw_map(integrals::spin_orbital_terms(h), 6);
  auto hf = prepare_reference(6, {0, 1, 2, 3});
  EXPECT_NEAR(expectation(hf, q), fixtures::reference_point("hf", 0.9)["e_hf"].get<double>(), 1e-8);
}

TEST(Gates, CnotAndBasisRotation) {
  auto s = prepare_reference(2, {0});
  apply_cnot(s, 0, 1);
  EXPECT_EQ(s.amp[0b11], Complex(1.0));
  auto plus = prepare_reference(1, {});
  apply_hadamard(plus, 0);
  rotate_to_basis(plus, "X");
  EXPECT_NEAR(std::abs(plus.amp[0]), 1.0, 1e-15);
  Statevector yplus(1);
  yplus.amp << 1.0 / std::sqrt(2.0), Complex(0.0, 1.0 / std::sqrt(2.0));
  rotate_to_basis(yplus, "Y");
  EXPECT_NEAR(std::abs(yplus.amp[0]), 1.0, 1e-15);
}

TEST(Sampling, BornRuleChiSquare) {
  std::mt19937_64 rng(2024);
  auto s = random_state(3, rng);
  const std::uint64_t shots = 100000;
  auto c = sample_counts(s, "ZZZ", shots, {}, rng);
  double chi2 = 0.0;
  for (Eigen::Index b = 0; b < s.dim(); ++b) {
    const double e = shots * std::norm(s.amp[b]);
    const double o = c.count(b) ? double(c[b]) : 0.0;
    chi2 += (o - e) * (o - e) / e;
  }
  // 7 degrees of freedom; 99.9% quantile is 24.3
  EXPECT_LT(chi2, 24.3);
}

TEST(Sampling, DeterministicReadoutFlip) {
  std::mt19937_64 rng(1);
  NoiseModel nm;
  nm.readout_p10 = 1.0;
  auto c = sample_counts(prepare_reference(2, {0, 1}), "ZZ", 500, nm, rng);
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c.begin()->first, 0u);
  EXPECT_EQ(c.begin()->second, 500u);
}

TEST(Sampling, DepolarizingLeaksParity) {
  std::mt19937_64 rng(9);
  PauliSum g(PauliString::parse("XXXY"), Complex(0.0, -0.5));
  LayeredCircuit circ;
  circ.initial = prepare_reference(4, {0, 1});
  circ.layers.push_back([g](Statevector& s) { s = apply_exp_generator(s, g, 0.4); });
  NoiseModel nm;
  nm.depol_p = 0.01;
  auto c = sample_counts(circ, "ZZZZ", 20000, nm, rng);
  double zzzz = 0.0;
  for (auto [b, n] : c) zzzz += ((popcount(b) & 1) ? -1.0 : 1.0) * double(n);
  zzzz /= 20000.0;
  EXPECT_LT(zzzz, 1.0);
  EXPECT_GT(zzzz, 0.9);
}

TEST(Sampling, SeedDeterminism) {
  auto s = prepare_reference(3, {1});
  NoiseModel nm{0.05, 0.02, 0.02};
  std::mt19937_64 a(42), b(42);
  EXPECT_EQ(sample_counts(s, "XYZ", 1000, nm, a), sample_counts(s, "XYZ", 1000, nm, b));
}
