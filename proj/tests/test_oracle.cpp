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

IntegralSet load(const std::string& sys, const std::string& bond) {
  return read_fcidump(fixtures::data_path(sys + "/" + sys + "_" + bond + ".fcidump"));
}

OrbitalPartition partition_for(const std::string& sys, int n) {
  auto r = fixtures::references(sys);
  return partition_orbitals(n, r["frozen"].get<std::vector<int>>(), r["inactive"].get<std::vector<int>>(),
                            r["active"].get<std::vector<int>>());
}

}  // namespace

TEST(Casci, OneOrbitalClosedForm) {
  std::istringstream is("&FCI NORB=1,NELEC=2 &END\n 0.6 1 1 1 1\n -1.1 1 1 0 0\n 0.3 0 0 0 0\n");
  auto ints = parse_fcidump(is);
  auto r = oracle::casci(ints, 2, 0);
  EXPECT_NEAR(r.energy, 2 * -1.1 + 0.6 + 0.3, 1e-14);
  EXPECT_LT(r.residual, 1e-9);
}

TEST(Casci, ZeroElectronSectorIsCore) {
  auto ints = load("hf", "0.90");
  EXPECT_NEAR(oracle::casci(ints, 0, 0).energy, ints.core, 1e-14);
  auto h = fold_core(ints, partition_for("hf", 6));
  auto q = qsim::jw_map(spin_orbital_terms(h), 6);
  EXPECT_NEAR(oracle::fci_sector_check(q, 0), h.e_core, 1e-12);
  EXPECT_THROW(oracle::fci_sector_check(q, 7), oracle::OracleError);
  EXPECT_THROW(oracle::casci(ints, 3, 0), oracle::OracleError);
}

TEST(Casci, FixturesMatchExternalReferences) {
  for (std::string sys : {"hf", "n2", "f2"}) {
    const auto refs = fixtures::references(sys);
    for (const auto& p : refs["points"]) {
      auto ints = read_fcidump(fixtures::data_path(sys + "/" + p["file"].get<std::string>()));
      auto part = partition_for(sys, ints.n_orbitals);
      auto h = fold_core(ints, part);
      auto act = oracle::casci(h, h.n_electrons, 0);
      EXPECT_NEAR(act.energy, p["e_casci_active"].get<double>(), 1e-8) << sys << " " << p["bond_length"];
      EXPECT_LT(act.residual, 1e-9);
      if (sys != "n2") {
        auto full = oracle::casci(ints, ints.n_electrons, 0);
        EXPECT_NEAR(full.energy, p["e_fci"].get<double>(), 1e-8);
      }
      if (p.contains("e_casci_nonfrozen")) {
        std::vector<int> keep;
        for (int q = 0; q < ints.n_orbitals; ++q)
          if (std::find(part.frozen.begin(), part.frozen.end(), q) == part.frozen.end()) keep.push_back(q);
        auto nf = fold_orbitals(ints, part.frozen, keep);
        EXPECT_NEAR(oracle::casci(nf, nf.n_electrons, 0).energy, p["e_casci_nonfrozen"].get<double>(), 1e-8);
      }
    }
  }
}

TEST(Casci, N2FullSpaceDavidson) {
  auto ints = load("n2", "1.10");
  auto r = oracle::casci(ints, 14, 0);
  EXPECT_EQ(r.space.size(), 14400u);
  EXPECT_NEAR(r.energy, fixtures::reference_point("n2", 1.1)["e_fci"].get<double>(), 1e-8);
  EXPECT_LT(r.residual, 1e-9);
}

TEST(Casci, SectorSizeLimit) {
  auto ints = load("n2", "1.10");
  EXPECT_THROW(oracle::casci(ints, 14, 0, 1000), oracle::OracleError);
}

TEST(Casci, OrbitalRelabelingInvariance) {
  auto ints = load("hf", "1.30");
  // swap the two pi orbitals (2 and 4), which are degenerate
  std::vector<int> perm{0, 1, 4, 3, 2, 5};
  auto swapped = fold_orbitals(ints, {}, perm);
  EXPECT_NEAR(oracle::casci(ints, 10, 0).energy, oracle::casci(swapped, 10, 0).energy, 1e-9);
}

TEST(Casci, BoundsAgainstHartreeFock) {
  const auto refs = fixtures::references("hf");
  for (const auto& p : refs["points"]) {
    auto ints = read_fcidump(fixtures::data_path("hf/" + p["file"].get<std::string>()));
    EXPECT_LE(oracle::casci(ints, 10, 0).energy, p["e_hf"].get<double>() + 1e-10);
  }
}

TEST(FciSectorCheck, JordanWignerSpectrum) {
  {
    auto ints = load("hf", "0.90");
    auto h = fold_core(ints, partition_for("hf", 6));
    auto q = qsim::jw_map(spin_orbital_terms(h), 6);
    EXPECT_NEAR(oracle::fci_sector_check(q, 4), oracle::casci(h, 4, 0).energy, 1e-9);
  }
  {
    auto ints = load("n2", "1.10");
    auto h = fold_core(ints, partition_for("n2", 10));
    auto q = qsim::jw_map(spin_orbital_terms(h), 14);
    EXPECT_NEAR(oracle::fci_sector_check(q, 8), oracle::casci(h, 8, 0).energy, 1e-8);
  }
}
