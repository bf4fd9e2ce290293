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
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "ptvqe/integrals.hpp"
#include "ptvqe/rdm.hpp"
#include "ptvqe/vqe.hpp"
#include "support.hpp"

using namespace ptvqe;

namespace {

qsim::Statevector random_state(int n, int particles, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  qsim::Statevector s(n);
  for (Det d : qsim::number_sector(n, particles)) s.amp[static_cast<Eigen::Index>(d)] = Complex(g(rng), g(rng));
  s.amp.normalize();
  return s;
}

/// Direct bracket (1/k!) <a+_P a_Q> for sorted index lists.
Complex direct_element(const qsim::Statevector& s, const std::vector<int>& p, const std::vector<int>& q) {
  FermionOperator op;
  FermionTerm t;
  double f = 1.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    t.ops.push_back(cre(p[i]));
    f *= static_cast<double>(i + 1);
  }
  for (auto it = q.rbegin(); it != q.rend(); ++it) t.ops.push_back(ann(*it));
  t.coeff = 1.0 / f;
  op.terms.push_back(t);
  return s.amp.dot(qsim::apply_fermion(op, s.amp));
}

std::vector<int> bits(Det m) {
  std::vector<int> out;
  for (int p = 0; m; ++p, m >>= 1)
    if (m & 1) out.push_back(p);
  return out;
}

qsim::Statevector rotated_determinant(int n, const std::vector<int>& occ, std::uint64_t seed) {
  auto s = qsim::prepare_reference(n, occ);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (const auto& op : vqe::build_pool(n))
    if (op.kind == vqe::PoolKind::Single) s = qsim::apply_exp_generator(s, op.generator, u(rng));
  return s;
}

}  // namespace

TEST(ComputeRdm, DeterminantOccupations) {
  auto s = qsim::prepare_reference(6, {0, 1, 3});
  auto d1 = rdm::compute_rdm(s, 1);
  for (int p = 0; p < 6; ++p)
    for (int q = 0; q < 6; ++q) {
      const double expect = (p == q && (p == 0 || p == 1 || p == 3)) ? 1.0 : 0.0;
      EXPECT_NEAR(std::abs(d1.matrix()(p, q) - expect), 0.0, 1e-15);
    }
}

TEST(ComputeRdm, TracesAreBinomial) {
  auto s = random_state(8, 4, 11);
  for (int k = 1; k <= 4; ++k)
    EXPECT_NEAR(std::abs(rdm::compute_rdm(s, k).trace() - double(binomial(4, k))), 0.0, 1e-12) << k;
  auto f2 = vqe::fixed_ansatz_f2(0.37).prepare();
  EXPECT_NEAR(std::abs(rdm::compute_rdm(f2, 2).trace() - 1.0), 0.0, 1e-14);
}

TEST(ComputeRdm, MatchesDirectOperatorApplication) {
  auto s = random_state(6, 3, 5);
  for (int k = 1; k <= 3; ++k) {
    auto d = rdm::compute_rdm(s, k);
    for (Eigen::Index i = 0; i < d.dim(); i += 3)
      for (Eigen::Index j = 0; j < d.dim(); j += 2) {
        const auto p = bits(d.subsets()[i]), q = bits(d.subsets()[j]);
        EXPECT_NEAR(std::abs(d.matrix()(i, j) - direct_element(s, p, q)), 0.0, 1e-13);
      }
  }
}

TEST(ComputeRdm, HermitianAndAntisymmetric) {
  auto s = random_state(6, 3, 9);
  auto d = rdm::compute_rdm(s, 2);
  EXPECT_LT((d.matrix() - d.matrix().adjoint()).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_NEAR(std::abs(d({1, 4}, {2, 5}) + d({4, 1}, {2, 5})), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(d({1, 4}, {2, 5}) + d({1, 4}, {5, 2})), 0.0, 1e-15);
  EXPECT_EQ(d({3, 3}, {2, 5}), Complex(0.0));
}

TEST(ComputeRdm, ContractionLowersOrder) {
  auto s = random_state(8, 4, 21);
  for (int k = 2; k <= 4; ++k) {
    auto hi = rdm::compute_rdm(s, k);
    auto lo = rdm::compute_rdm(s, k - 1);
    EXPECT_LT((rdm::contract(hi, 4.0).matrix() - lo.matrix()).cwiseAbs().maxCoeff(), 1e-13) << k;
  }
}

TEST(ComputeRdm, OrderBeyondParticleNumberIsFlagged) {
  auto s = random_state(6, 2, 1);
  auto d = rdm::compute_rdm(s, 3);
  EXPECT_TRUE(d.beyond_particle_number);
  EXPECT_EQ(d.matrix().cwiseAbs().maxCoeff(), 0.0);
  EXPECT_FALSE(rdm::compute_rdm(s, 2).beyond_particle_number);
}

TEST(RdmEnergy, MatchesVqeEnergy) {
  auto ints = integrals::read_fcidump(fixtures::data_path("hf/hf_1.30.fcidump"));
  auto h = integrals::fold_core(ints, integrals::partition_orbitals(6, {}, {0, 1, 2}, {3, 4, 5}));
  auto sector = vqe::make_sector(h);
  auto r = vqe::adapt_vqe(sector, vqe::build_pool(6));
  auto d1 = rdm::compute_rdm<double>(sector.space.dets(), r.sector_state, 6, 1);
  auto d2 = rdm::compute_rdm<double>(sector.space.dets(), r.sector_state, 6, 2);
  EXPECT_NEAR(rdm::rdm_energy(h, d1, d2), r.energy, 1e-10);
  auto c2 = rdm::compute_rdm(r.state, 2);
  EXPECT_LT((c2.matrix().real() - d2.matrix()).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(PauliTerms, OneBodyExamples) {
  auto t = rdm::rdm_pauli_terms(1, 2);
  // element (0,0) uses {I, Z0}; element (0,1) uses four XY strings
  std::set<std::string> e00, e01;
  for (const auto& e : t.elements) {
    for (const auto& [s, w] : e.parts) {
      if (e.row == 0 && e.col == 0) e00.insert(t.strings[s].letters());
      if (e.row == 0 && e.col == 1) e01.insert(t.strings[s].letters());
    }
  }
  EXPECT_EQ(e00, (std::set<std::string>{"II", "ZI"}));
  EXPECT_EQ(e01, (std::set<std::string>{"XX", "YY", "XY", "YX"}));
}

TEST(PauliTerms, ExactValuesReassembleRdm) {
  for (auto [n, k] : {std::pair{4, 1}, std::pair{4, 2}, std::pair{6, 3}}) {
    auto s = random_state(n, 3 > n ? n : 3, 40 + n + k);
    auto terms = rdm::rdm_pauli_terms(k, n);
    std::vector<double> v;
    for (const auto& p : terms.strings) v.push_back(qsim::pauli_expectation(s, p).real());
    auto est = rdm::assemble_rdm(terms, v);
    EXPECT_LT((est.matrix() - rdm::compute_rdm(s, k).matrix()).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(PauliTerms, DistinctStringCountTwoBodyFourQubits) {
  auto terms = rdm::rdm_pauli_terms(2, 4);
  // union over every ordered element, lower triangle included
  std::set<std::pair<Det, Det>> all;
  auto subs = k_subsets(4, 2);
  for (Det a : subs)
    for (Det b : subs) {
      FermionOperator op;
      FermionTerm t;
      auto p = bits(a), q = bits(b);
      t.ops = {cre(p[0]), cre(p[1]), ann(q[1]), ann(q[0])};
      op.terms.push_back(t);
      for (const auto& [key, c] : qsim::jw_map(op, 4).terms()) all.insert(key);
    }
  EXPECT_EQ(terms.strings.size(), all.size());
  EXPECT_EQ(terms.strings.size(), 99u);
}

TEST(GroupQwc, SmallExamples) {
  using qsim::PauliString;
  auto plan = rdm::group_qwc({PauliString::parse("ZI"), PauliString::parse("IZ"), PauliString::parse("ZZ")});
  EXPECT_EQ(plan.groups.size(), 1u);
  EXPECT_EQ(plan.groups[0].basis, "ZZ");
  EXPECT_EQ(rdm::group_qwc({PauliString::parse("X"), PauliString::parse("Z")}).groups.size(), 2u);
}

TEST(GroupQwc, TwoBodyFourQubitPlan) {
  auto terms = rdm::rdm_pauli_terms(2, 4);
  auto plan = rdm::group_qwc(terms.strings);
  EXPECT_LE(plan.groups.size(), 81u);
  EXPECT_LE(plan.groups.size(), terms.strings.size());
  EXPECT_EQ(plan.groups.size(), 44u);
  std::size_t covered = 0;
  for (const auto& g : plan.groups) {
    covered += g.members.size();
    for (auto a : g.members) {
      for (auto b : g.members) EXPECT_TRUE(qsim::qubitwise_commute(plan.strings[a], plan.strings[b]));
      for (int q = 0; q < 4; ++q) {
        const char l = plan.strings[a].letter(q);
        if (l != 'I') EXPECT_EQ(g.basis[q], l);
      }
    }
  }
  EXPECT_EQ(covered, terms.strings.size());
}

namespace {

std::vector<qsim::Counts> measure(const rdm::MeasurementPlan& plan, const qsim::Statevector& s, std::uint64_t shots,
                                  const qsim::NoiseModel& noise, std::mt19937_64& rng) {
  std::vector<qsim::Counts> out;
  for (const auto& g : plan.groups) out.push_back(qsim::sample_counts(s, g.basis, shots, noise, rng));
  return out;
}

}  // namespace

TEST(EstimateRdm, ShotNoiseScaling) {
  auto s = vqe::fixed_ansatz_f2(1.1).prepare();
  s = qsim::apply_exp_generator(s, vqe::build_pool(4)[0].generator, 0.4);
  auto terms = rdm::rdm_pauli_terms(2, 4);
  auto plan = rdm::group_qwc(terms.strings);
  auto exact = rdm::compute_rdm(s, 2);
  std::mt19937_64 rng(2024);
  double err[2];
  int i = 0;
  for (std::uint64_t shots : {10000ull, 1000000ull}) {
    double acc = 0.0;
    for (int rep = 0; rep < 4; ++rep) {
      auto est = rdm::estimate_rdm(terms, plan, measure(plan, s, shots, {}, rng));
      EXPECT_LT((est.matrix() - est.matrix().adjoint()).cwiseAbs().maxCoeff(), 1e-15);
      acc += (est.matrix() - exact.matrix()).cwiseAbs().maxCoeff();
    }
    err[i++] = acc / 4;
  }
  EXPECT_LT(err[0], 5e-2);
  EXPECT_GT(err[0] / err[1], 4.0);
  EXPECT_LT(err[0] / err[1], 25.0);
}

TEST(EstimateRdm, ReadoutNoiseShiftsTrace) {
  auto s = vqe::fixed_ansatz_f2(0.8).prepare();
  auto terms = rdm::rdm_pauli_terms(1, 4);
  auto plan = rdm::group_qwc(terms.strings);
  std::mt19937_64 rng(3);
  auto clean = rdm::estimate_rdm(terms, plan, measure(plan, s, 100000, {}, rng));
  EXPECT_NEAR(clean.trace().real(), 2.0, 1e-12);
  auto noisy = rdm::estimate_rdm(terms, plan, measure(plan, s, 100000, {0.0, 0.0, 0.08}, rng));
  EXPECT_NEAR(noisy.trace().real(), 2.0 * (1.0 - 0.08), 0.02);
}

TEST(EstimateRdm, EmptyGroupCountsRejected) {
  auto terms = rdm::rdm_pauli_terms(1, 2);
  auto plan = rdm::group_qwc(terms.strings);
  std::vector<qsim::Counts> counts(plan.groups.size());
  EXPECT_THROW(rdm::estimate_rdm(terms, plan, counts), rdm::RdmError);
}

TEST(Wedge, SlaterIdentityAndIndexSigns) {
  auto s = rotated_determinant(6, {0, 1, 2}, 77);
  auto d1 = rdm::compute_rdm(s, 1), d2 = rdm::compute_rdm(s, 2);
  auto w = rdm::wedge(d1, d1);
  EXPECT_LT((w.matrix() - d2.matrix()).cwiseAbs().maxCoeff(), 1e-12);
  for (int p = 0; p < 6; ++p)
    for (int q = 0; q < 6; ++q)
      for (int r = 0; r < 6; ++r)
        for (int t = 0; t < 6; ++t) {
          if (p == q || r == t) continue;
          const Complex expect = 0.5 * (d1({p}, {r}) * d1({q}, {t}) - d1({p}, {t}) * d1({q}, {r}));
          ASSERT_NEAR(std::abs(w({p, q}, {r, t}) - expect), 0.0, 1e-13);
          ASSERT_NEAR(std::abs(w({q, p}, {r, t}) + expect), 0.0, 1e-13);
        }
}

TEST(Cumulant, ExactOnDeterminants) {
  for (std::uint64_t seed : {1, 2, 3}) {
    auto s = rotated_determinant(8, {0, 1, 2, 3}, seed);
    auto c3 = rdm::cumulant_3rdm(rdm::compute_rdm(s, 1), rdm::compute_rdm(s, 2));
    EXPECT_LT((c3.matrix() - rdm::compute_rdm(s, 3).matrix()).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Cumulant, MixedBlocksVanishForProductStates) {
  // two correlated pairs on disjoint orbitals: the connected part cannot
  // couple them
  qsim::Statevector s(8);
  const double a = 0.8, b = 0.6, c = 0.3, d = std::sqrt(1 - 0.09);
  auto put = [&](Det x, double v) { s.amp[static_cast<Eigen::Index>(x)] += v; };
  put(0b00110011, a * c);
  put(0b11000011, a * d);
  put(0b00111100, b * c);
  put(0b11001100, b * d);
  auto d1 = rdm::compute_rdm(s, 1), d2 = rdm::compute_rdm(s, 2), d3 = rdm::compute_rdm(s, 3);
  auto delta3 = d3;
  delta3.matrix() -= rdm::cumulant_3rdm(d1, d2).matrix();
  const Det left = 0b00001111;
  double mixed = 0.0, pure = 0.0;
  for (Eigen::Index i = 0; i < delta3.dim(); ++i)
    for (Eigen::Index j = 0; j < delta3.dim(); ++j) {
      const Det u = delta3.subsets()[i] | delta3.subsets()[j];
      const double v = std::abs(delta3.matrix()(i, j));
      if ((u & left) && (u & ~left)) {
        mixed = std::max(mixed, v);
      } else {
        pure = std::max(pure, v);
      }
    }
  EXPECT_LT(mixed, 1e-12);
  EXPECT_GT(pure, 1e-3);
}

TEST(Cumulant, TwoParticleIdentityOnRandomStates) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto s = random_state(6, 3, 100 + seed);
    auto d1 = rdm::compute_rdm(s, 1), d2 = rdm::compute_rdm(s, 2);
    auto delta = rdm::cumulant_2rdm(d1, d2);
    auto w = rdm::wedge(d1, d1);
    EXPECT_LT((delta.matrix() + w.matrix() - d2.matrix()).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_NEAR(std::abs(w({0, 3}, {1, 4}) + w({3, 0}, {1, 4})), 0.0, 1e-15);
    // reconstruction of the exact 3-RDM with the connected remainder
    auto d3 = rdm::compute_rdm(s, 3);
    auto delta3 = d3;
    delta3.matrix() -= rdm::cumulant_3rdm(d1, d2).matrix();
    EXPECT_LT((rdm::cumulant_3rdm(d1, d2).matrix() + delta3.matrix() - d3.matrix()).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(Cumulant, TwoConfigurationAndVacuum) {
  auto s = vqe::fixed_ansatz_f2(1.0).prepare();
  auto c3 = rdm::cumulant_3rdm(rdm::compute_rdm(s, 1), rdm::compute_rdm(s, 2));
  // the exact 3-RDM vanishes for two electrons; the deviation is the neglected connected part
  EXPECT_TRUE(rdm::compute_rdm(s, 3).beyond_particle_number);
  EXPECT_GT(c3.matrix().norm(), 1e-2);
  auto vac = qsim::prepare_reference(4, {});
  auto z = rdm::cumulant_3rdm(rdm::compute_rdm(vac, 1), rdm::compute_rdm(vac, 2));
  EXPECT_EQ(z.matrix().cwiseAbs().maxCoeff(), 0.0);
}

TEST(Export, RoundTripWithManifest) {
  auto s = random_state(4, 2, 8);
  auto d = rdm::compute_rdm(s, 2);
  std::stringstream data, manifest;
  rdm::export_rdm(d, data, manifest);
  auto back = rdm::import_rdm(data, 2, 4);
  EXPECT_EQ((back.matrix() - d.matrix()).cwiseAbs().maxCoeff(), 0.0);
  auto m = nlohmann::json::parse(manifest.str());
  EXPECT_EQ(m["order"], 2);
  EXPECT_EQ(m["n_spin_orbitals"], 4);
  EXPECT_NEAR(m["trace"][0].get<double>(), 1.0, 1e-14);
}
