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

#include <sstream>

#include <gtest/gtest.h>

#include "ptvqe/integrals.hpp"
#include "ptvqe/oracle.hpp"
#include "ptvqe/qsim.hpp"
#include "support.hpp"

using namespace ptvqe;
using namespace ptvqe::integrals;

namespace {

IntegralSet parse(const std::string& s) {
  std::istringstream is(s);
  return parse_fcidump(is);
}

IntegralSet hf_fixture(const char* bond = "0.90") {
  return read_fcidump(fixtures::data_path(std::string("hf/hf_") + bond + ".fcidump"));
}

}  // namespace

TEST(Fcidump, MinimalOneOrbital) {
  auto ints = parse(" &FCI NORB=1,NELEC=2,MS2=0,\n &END\n 0.5 1 1 1 1\n -1.0 1 1 0 0\n 0.0 0 0 0 0\n");
  EXPECT_EQ(ints.n_orbitals, 1);
  EXPECT_EQ(ints.n_electrons, 2);
  EXPECT_DOUBLE_EQ(ints.h1(0, 0), -1.0);
  EXPECT_DOUBLE_EQ(ints.h2(0, 0, 0, 0), 0.5);
  EXPECT_DOUBLE_EQ(ints.core, 0.0);
}

TEST(Fcidump, SymmetryCompletionAndFortranFloats) {
  auto ints = parse("&FCI NORB=3, NELEC=2 /\n 0.25D0 2 1 3 2\n 1.5d-1 3 3 2 1\n");
  for (auto [p, q, r, s] : {std::array{1, 0, 2, 1}, {0, 1, 2, 1}, {1, 0, 1, 2}, {0, 1, 1, 2}, {2, 1, 1, 0},
                            {1, 2, 1, 0}, {2, 1, 0, 1}, {1, 2, 0, 1}})
    EXPECT_DOUBLE_EQ(ints.h2(p, q, r, s), 0.25);
  EXPECT_DOUBLE_EQ(ints.h2(0, 1, 2, 2), 0.15);
  EXPECT_DOUBLE_EQ(ints.h2(0, 0, 1, 1), 0.0);
}

TEST(Fcidump, Errors) {
  EXPECT_THROW(parse("NORB=2\n"), FcidumpError);
  EXPECT_THROW(parse("&FCI NELEC=2 &END\n"), FcidumpError);
  EXPECT_THROW(parse("&FCI NORB=2,NELEC=2 &END\n 1.0 3 1 0 0\n"), FcidumpError);
  EXPECT_THROW(parse("&FCI NORB=2,NELEC=2 &END\n 1.0 2 1 0 0\n 1.1 1 2 0 0\n"), FcidumpError);
  EXPECT_THROW(parse("&FCI NORB=2,NELEC=2 &END\n 1.0 2 1 1 1\n 1.1 1 1 1 2\n"), FcidumpError);
  EXPECT_NO_THROW(parse("&FCI NORB=2,NELEC=2 &END\n 1.0 2 1 1 1\n 1.0 1 1 1 2\n"));
  EXPECT_THROW(parse("&FCI NORB=2,NELEC=2\n 1.0 2 1 0 0\n"), FcidumpError);
}

TEST(Fcidump, HeaderFields) {
  auto ints = hf_fixture();
  EXPECT_EQ(ints.n_orbitals, 6);
  EXPECT_EQ(ints.n_electrons, 10);
  EXPECT_EQ(ints.ms2, 0);
  EXPECT_EQ(ints.orbsym.size(), 6u);
  for (int p = 0; p < 6; ++p)
    for (int q = 0; q < 6; ++q) EXPECT_EQ(ints.h1(p, q), ints.h1(q, p));
}

TEST(Fcidump, RoundTrip) {
  for (const char* f : {"hf/hf_0.90.fcidump", "f2/f2_1.40.fcidump"}) {
    auto a = read_fcidump(fixtures::data_path(f));
    std::stringstream ss;
    write_fcidump(a, ss);
    auto b = parse_fcidump(ss);
    ASSERT_EQ(a.n_orbitals, b.n_orbitals);
    EXPECT_EQ(a.n_electrons, b.n_electrons);
    EXPECT_EQ(a.orbsym, b.orbsym);
    EXPECT_LE((a.h1 - b.h1).cwiseAbs().maxCoeff(), 1e-12);
    double d = 0.0;
    for (std::size_t k = 0; k < a.h2.raw().size(); ++k) d = std::max(d, std::abs(a.h2.raw()[k] - b.h2.raw()[k]));
    EXPECT_LE(d, 1e-12);
    EXPECT_NEAR(a.core, b.core, 1e-12);
  }
}

TEST(Fcidump, HfFixtureMatchesExternalFci) {
  auto ints = hf_fixture();
  auto ref = fixtures::reference_point("hf", 0.9);
  auto ci = oracle::casci(ints, ints.n_electrons, 0);
  EXPECT_NEAR(ci.energy, ref["e_fci"].get<double>(), 1e-8);
}

TEST(Partition, Examples) {
  auto hf = partition_orbitals(6, {}, {0, 1, 2}, {3, 4, 5});
  EXPECT_TRUE(hf.virtual_.empty());
  auto n2 = partition_orbitals(10, {}, {0, 1, 2}, {3, 4, 5, 6, 7, 8, 9});
  EXPECT_TRUE(n2.virtual_.empty());
  auto small = partition_orbitals(4, {0}, {}, {1, 2});
  EXPECT_EQ(small.virtual_, std::vector<int>{3});
  auto order = partition_orbitals(5, {}, {3}, {4, 0});
  EXPECT_EQ(order.active, (std::vector<int>{4, 0}));
  EXPECT_EQ(order.virtual_, (std::vector<int>{1, 2}));
}

TEST(Partition, Errors) {
  EXPECT_THROW(partition_orbitals(4, {0}, {0}, {1}), PartitionError);
  EXPECT_THROW(partition_orbitals(4, {}, {1}, {4}), PartitionError);
  EXPECT_THROW(partition_orbitals(4, {}, {1, 1}, {2}), PartitionError);
}

TEST(FoldCore, EmptyCoreIsIdentity) {
  auto ints = hf_fixture();
  auto part = partition_orbitals(6, {}, {}, {0, 1, 2, 3, 4, 5});
  auto h = fold_core(ints, part);
  EXPECT_DOUBLE_EQ(h.e_core, ints.core);
  EXPECT_EQ((h.f1 - ints.h1).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(h.v2.raw(), ints.h2.raw());
}

TEST(FoldCore, AllInactiveGivesClosedShellEnergy) {
  auto ints = hf_fixture();
  auto part = partition_orbitals(6, {}, {0, 1, 2, 3, 4}, {});
  auto h = fold_core(ints, part);
  // determinant expectation through the generic fermionic matrix
  Det hf = 0;
  for (int p = 0; p < 10; ++p) hf |= Det{1} << p;
  auto op = spin_orbital_terms(ints);
  auto m = qsim::fermion_matrix(op, {hf});
  EXPECT_NEAR(h.e_core, m.coeff(0, 0), 1e-10);
  EXPECT_NEAR(h.e_core, fixtures::reference_point("hf", 0.9)["e_hf"].get<double>(), 1e-8);
}

TEST(FoldCore, ActiveSpaceMatchesRestrictedFullSpace) {
  for (const char* bond : {"0.70", "1.50", "2.50"}) {
    auto ints = hf_fixture(bond);
    auto part = partition_orbitals(6, {}, {0, 1, 2}, {3, 4, 5});
    auto h = fold_core(ints, part);
    auto act = oracle::casci(h, h.n_electrons, 0);
    // full-space determinants with the inactive orbitals doubly occupied
    Det inact = 0;
    for (int i : part.inactive) inact |= Det{3} << (2 * i);
    auto full = oracle::DeterminantSpace::sector(6, 5, 5);
    std::vector<Det> keep;
    for (Det d : full.dets())
      if ((d & inact) == inact) keep.push_back(d);
    auto hm = oracle::ci_hamiltonian(ints, oracle::DeterminantSpace(keep));
    auto [e, v] = oracle::lowest_eigenpair(hm);
    EXPECT_NEAR(act.energy, e, 1e-8);
    EXPECT_NEAR(act.energy, fixtures::reference_point("hf", std::stod(bond))["e_casci_active"].get<double>(), 1e-8);
  }
}

TEST(SpinOrbitalTerms, SingleOrbitalOneBody) {
  auto ints = parse("&FCI NORB=1,NELEC=2 &END\n -1.25 1 1 0 0\n");
  auto op = spin_orbital_terms(ints);
  ASSERT_EQ(op.terms.size(), 2u);
  EXPECT_EQ(op.terms[0].ops, (std::vector<Ladder>{cre(0), ann(0)}));
  EXPECT_EQ(op.terms[1].ops, (std::vector<Ladder>{cre(1), ann(1)}));
  EXPECT_EQ(op.terms[0].coeff, op.terms[1].coeff);
}

TEST(SpinOrbitalTerms, CoulombOnDoublyOccupied) {
  const double g = 0.7;
  auto ints = parse("&FCI NORB=1,NELEC=2 &END\n 0.7 1 1 1 1\n");
  auto op = spin_orbital_terms(ints);
  ASSERT_EQ(op.terms.size(), 1u);
  auto m = qsim::fermion_matrix(op, {Det{3}});
  EXPECT_NEAR(m.coeff(0, 0), g, 1e-15);
}

TEST(SpinOrbitalTerms, N2ActiveIsHermitian) {
  auto ints = read_fcidump(fixtures::data_path("n2/n2_1.10.fcidump"));
  auto h = fold_core(ints, partition_orbitals(10, {}, {0, 1, 2}, {3, 4, 5, 6, 7, 8, 9}));
  auto op = spin_orbital_terms(h);
  // every term's conjugate appears with the conjugate coefficient after canonical ordering
  std::map<std::vector<std::pair<int, bool>>, Complex> table;
  auto canon = [](std::vector<Ladder> ops, Complex c) {
    // a+p a+q a_s a_r with p<q, r<s is canonical for two-body terms
    std::vector<std::pair<int, bool>> key;
    if (ops.size() == 4) {
      if (ops[0].orbital > ops[1].orbital) { std::swap(ops[0], ops[1]); c = -c; }
      if (ops[2].orbital < ops[3].orbital) { std::swap(ops[2], ops[3]); c = -c; }
    }
    for (auto& l : ops) key.emplace_back(l.orbital, l.dagger);
    return std::make_pair(key, c);
  };
  for (const auto& t : op.terms) {
    auto [k, c] = canon(t.ops, t.coeff);
    table[k] += c;
  }
  for (const auto& t : op.terms) {
    auto a = adjoint(t);
    auto [k, c] = canon(a.ops, a.coeff);
    ASSERT_TRUE(table.count(k)) << to_string(t.ops);
    EXPECT_NEAR(std::abs(table[k] - c), 0.0, 1e-14);
  }
}
