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
#include "ptvqe/rdm.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

namespace ptvqe::rdm {

int sort_sign(std::vector<int>& idx) {
  int sign = 1;
  for (std::size_t i = 0; i < idx.size(); ++i)
    for (std::size_t j = 0; j + 1 < idx.size() - i; ++j) {
      if (idx[j] == idx[j + 1]) return 0;
      if (idx[j] > idx[j + 1]) {
        std::swap(idx[j], idx[j + 1]);
        sign = -sign;
      }
    }
  return sign;
}

namespace {

Det mask_of(const std::vector<int>& idx) {
  Det m = 0;
  for (int p : idx) m |= Det{1} << p;
  return m;
}

std::vector<int> bits_of(Det m) {
  std::vector<int> out;
  for (; m; m &= m - 1) out.push_back(std::countr_zero(m));
  return out;
}

double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

/// All sub-masks of `m` with exactly `k` bits.
std::vector<Det> sub_masks(Det m, int k) {
  const auto b = bits_of(m);
  std::vector<Det> out;
  for (Det s : k_subsets(static_cast<int>(b.size()), k)) {
    Det t = 0;
    for (; s; s &= s - 1) t |= Det{1} << b[std::countr_zero(s)];
    out.push_back(t);
  }
  return out;
}

/// Parity of the number of (y in b, x in a) pairs with y < x.
int split_sign(Det a, Det b) {
  int inv = 0;
  for (Det m = a; m; m &= m - 1) inv += popcount(b & ((Det{1} << std::countr_zero(m)) - 1));
  return inv & 1 ? -1 : 1;
}

}  // namespace

template <class Scalar>
Rdm<Scalar>::Rdm(int order, int n) : k_(order), n_(n) {
  if (order < 0 || n < 0 || n > 62) throw RdmError("invalid RDM shape");
  subsets_ = k_subsets(n, order);
  std::sort(subsets_.begin(), subsets_.end());
  const auto dim = static_cast<Eigen::Index>(subsets_.size());
  m_ = Matrix::Zero(dim, dim);
}

template <class Scalar>
Scalar Rdm<Scalar>::operator()(std::vector<int> upper, std::vector<int> lower) const {
  if (static_cast<int>(upper.size()) != k_ || static_cast<int>(lower.size()) != k_)
    throw RdmError("index count differs from RDM order");
  for (int p : upper)
    if (p < 0 || p >= n_) throw RdmError("index out of range");
  for (int p : lower)
    if (p < 0 || p >= n_) throw RdmError("index out of range");
  const int s = sort_sign(upper) * sort_sign(lower);
  if (s == 0) return Scalar(0);
  return Scalar(s) * at(mask_of(upper), mask_of(lower));
}

template <class Scalar>
Scalar Rdm<Scalar>::trace() const {
  return Scalar(factorial(k_)) * m_.trace();
}

template <class Scalar>
Rdm<Scalar> compute_rdm(const std::vector<Det>& dets, const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& amps, int n,
                        int k) {
  using Matrix = typename Rdm<Scalar>::Matrix;
  Rdm<Scalar> d(k, n);
  int n_max = 0;
  for (std::size_t i = 0; i < dets.size(); ++i)
    if (amps[static_cast<Eigen::Index>(i)] != Scalar(0)) n_max = std::max(n_max, popcount(dets[i]));
  if (k > n_max) {
    d.beyond_particle_number = true;
    return d;
  }
  std::unordered_map<Det, Eigen::Index> rows;
  struct Entry {
    Eigen::Index row, col;
    Scalar v;
  };
  std::vector<Entry> entries;
  std::vector<Ladder> ops(k);
  for (std::size_t i = 0; i < dets.size(); ++i) {
    const Scalar a = amps[static_cast<Eigen::Index>(i)];
    if (a == Scalar(0)) continue;
    for (Det q : sub_masks(dets[i], k)) {
      const auto b = bits_of(q);
      for (int t = 0; t < k; ++t) ops[t] = ann(b[k - 1 - t]);
      auto r = apply_ladders(ops, dets[i]);
      auto [it, fresh] = rows.try_emplace(r->first, static_cast<Eigen::Index>(rows.size()));
      entries.push_back({it->second, subset_rank(q), Scalar(r->second) * a});
    }
  }
  Matrix phi = Matrix::Zero(static_cast<Eigen::Index>(rows.size()), d.dim());
  for (const auto& e : entries) phi(e.row, e.col) += e.v;
  d.matrix().noalias() = phi.adjoint() * phi;
  d.matrix() /= Scalar(factorial(k));
  return d;
}

ComplexRdm compute_rdm(const qsim::Statevector& state, int k) {
  std::vector<Det> dets;
  std::vector<Complex> amps;
  for (Eigen::Index b = 0; b < state.dim(); ++b)
    if (state.amp[b] != Complex(0.0)) {
      dets.push_back(static_cast<Det>(b));
      amps.push_back(state.amp[b]);
    }
  Eigen::VectorXcd v = Eigen::Map<Eigen::VectorXcd>(amps.data(), static_cast<Eigen::Index>(amps.size()));
  return compute_rdm<Complex>(dets, v, state.n_qubits, k);
}

template <class Scalar>
Rdm<Scalar> contract(const Rdm<Scalar>& d, double n_particles) {
  const int k = d.order();
  if (k < 1) throw RdmError("cannot contract a 0-RDM");
  Rdm<Scalar> out(k - 1, d.n());
  const double f = k / (n_particles - k + 1);
  const auto& sub = out.subsets();
  for (Eigen::Index i = 0; i < out.dim(); ++i)
    for (Eigen::Index j = 0; j < out.dim(); ++j) {
      Scalar acc(0);
      for (int r = 0; r < d.n(); ++r) {
        const Det bit = Det{1} << r;
        if ((sub[i] & bit) || (sub[j] & bit)) continue;
        const int s = ((popcount(sub[i] >> r) + popcount(sub[j] >> r)) & 1) ? -1 : 1;
        acc += Scalar(s) * d.at(sub[i] | bit, sub[j] | bit);
      }
      out.matrix()(i, j) = Scalar(f) * acc;
    }
  return out;
}

template <class Scalar>
Rdm<Scalar> wedge(const Rdm<Scalar>& a, const Rdm<Scalar>& b) {
  if (a.n() != b.n()) throw RdmError("wedge of RDMs over different registers");
  const int ka = a.order(), kb = b.order(), k = ka + kb;
  Rdm<Scalar> out(k, a.n());
  const double pref = std::pow(factorial(ka) * factorial(kb) / factorial(k), 2);
  struct Split {
    Eigen::Index ia, ib;
    double s;
  };
  std::vector<std::vector<Split>> splits(static_cast<std::size_t>(out.dim()));
  for (Eigen::Index i = 0; i < out.dim(); ++i) {
    const Det m = out.subsets()[i];
    for (Det pa : sub_masks(m, ka)) {
      const Det pb = m & ~pa;
      splits[i].push_back({subset_rank(pa), subset_rank(pb), double(split_sign(pa, pb))});
    }
  }
  for (Eigen::Index i = 0; i < out.dim(); ++i)
    for (Eigen::Index j = 0; j < out.dim(); ++j) {
      Scalar acc(0);
      for (const auto& x : splits[i])
        for (const auto& y : splits[j])
          acc += Scalar(x.s * y.s) * a.matrix()(x.ia, y.ia) * b.matrix()(x.ib, y.ib);
      out.matrix()(i, j) = Scalar(pref) * acc;
    }
  return out;
}

template <class Scalar>
Rdm<Scalar> cumulant_2rdm(const Rdm<Scalar>& d1, const Rdm<Scalar>& d2) {
  auto out = d2;
  out.matrix() -= wedge(d1, d1).matrix();
  return out;
}

template <class Scalar>
Rdm<Scalar> cumulant_3rdm(const Rdm<Scalar>& d1, const Rdm<Scalar>& d2) {
  const auto delta2 = cumulant_2rdm(d1, d2);
  auto out = wedge(wedge(d1, d1), d1);
  out.matrix() += Scalar(3) * wedge(delta2, d1).matrix();
  return out;
}

#define PTVQE_RDM_INSTANTIATE(S)                                                                               \
  template class Rdm<S>;                                                                                       \
  template Rdm<S> compute_rdm<S>(const std::vector<Det>&, const Eigen::Matrix<S, Eigen::Dynamic, 1>&, int, int); \
  template Rdm<S> contract<S>(const Rdm<S>&, double);                                                          \
  template Rdm<S> wedge<S>(const Rdm<S>&, const Rdm<S>&);                                                      \
  template Rdm<S> cumulant_2rdm<S>(const Rdm<S>&, const Rdm<S>&);                                              \
  template Rdm<S> cumulant_3rdm<S>(const Rdm<S>&, const Rdm<S>&);

PTVQE_RDM_INSTANTIATE(double)
PTVQE_RDM_INSTANTIATE(Complex)

RealRdm real_part(const ComplexRdm& d) {
  RealRdm out(d.order(), d.n());
  out.matrix() = d.matrix().real();
  out.beyond_particle_number = d.beyond_particle_number;
  return out;
}

ComplexRdm to_complex(const RealRdm& d) {
  ComplexRdm out(d.order(), d.n());
  out.matrix() = d.matrix().cast<Complex>();
  out.beyond_particle_number = d.beyond_particle_number;
  return out;
}

double rdm_energy(const integrals::ActiveHamiltonian& h, const RealRdm& d1, const RealRdm& d2) {
  const int n = 2 * h.n_orbitals();
  if (d1.order() != 1 || d2.order() != 2 || d1.n() != n || d2.n() != n) throw RdmError("RDM shapes do not match");
  double e = h.e_core;
  for (int p = 0; p < n; ++p)
    for (int q = p % 2; q < n; q += 2) e += h.f1(p / 2, q / 2) * d1.matrix()(p, q);
  const auto& sub = d2.subsets();
  for (Eigen::Index i = 0; i < d2.dim(); ++i) {
    const auto pq = bits_of(sub[i]);
    for (Eigen::Index j = 0; j < d2.dim(); ++j) {
      const double v = d2.matrix()(i, j);
      if (v == 0.0) continue;
      const auto rs = bits_of(sub[j]);
      e += 2.0 * integrals::antisym(h.v2, pq[0], pq[1], rs[0], rs[1]) * v;
    }
  }
  return e;
}

RdmPauliTerms rdm_pauli_terms(int k, int n) {
  RdmPauliTerms out;
  out.order = k;
  out.n_qubits = n;
  auto subs = k_subsets(n, k);
  std::sort(subs.begin(), subs.end());
  std::map<qsim::PauliSum::Key, std::size_t> index;
  const double inv = 1.0 / factorial(k);
  for (std::size_t i = 0; i < subs.size(); ++i)
    for (std::size_t j = i; j < subs.size(); ++j) {
      FermionTerm t{inv, {}};
      for (int p : bits_of(subs[i])) t.ops.push_back(cre(p));
      const auto q = bits_of(subs[j]);
      for (auto it = q.rbegin(); it != q.rend(); ++it) t.ops.push_back(ann(*it));
      FermionOperator op;
      op.terms.push_back(std::move(t));
      const auto ps = qsim::jw_map(op, n);
      RdmPauliTerms::Element e{static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j), {}};
      for (const auto& [key, c] : ps.terms()) {
        auto [it, fresh] = index.try_emplace(key, out.strings.size());
        if (fresh) out.strings.push_back(ps.string_of(key));
        e.parts.emplace_back(it->second, c);
      }
      out.elements.push_back(std::move(e));
    }
  return out;
}

std::vector<std::size_t> MeasurementPlan::group_of() const {
  std::vector<std::size_t> g(strings.size(), 0);
  for (std::size_t c = 0; c < groups.size(); ++c)
    for (auto m : groups[c].members) g[m] = c;
  return g;
}

MeasurementPlan group_qwc(const std::vector<qsim::PauliString>& strings, std::uint64_t shots_per_group) {
  const std::size_t n = strings.size();
  MeasurementPlan plan;
  plan.strings = strings;
  plan.shots_per_group = shots_per_group;
  if (n == 0) return plan;
  const int nq = strings.front().n_qubits;
  std::vector<std::vector<std::size_t>> adj(n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b)
      if (!qsim::qubitwise_commute(strings[a], strings[b])) {
        adj[a].push_back(b);
        adj[b].push_back(a);
      }
  std::vector<std::size_t> order(n);
  for (std::size_t a = 0; a < n; ++a) order[a] = a;
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return adj[a].size() > adj[b].size(); });
  std::vector<long> color(n, -1);
  long n_colors = 0;
  for (auto v : order) {
    std::vector<char> taken(static_cast<std::size_t>(n_colors) + 1, 0);
    for (auto u : adj[v])
      if (color[u] >= 0) taken[color[u]] = 1;
    long c = 0;
    while (taken[c]) ++c;
    color[v] = c;
    n_colors = std::max(n_colors, c + 1);
  }
  plan.groups.resize(static_cast<std::size_t>(n_colors));
  for (auto& g : plan.groups) g.basis.assign(static_cast<std::size_t>(nq), 'Z');
  for (std::size_t a = 0; a < n; ++a) {
    auto& g = plan.groups[color[a]];
    g.members.push_back(a);
    for (int q = 0; q < nq; ++q) {
      const char l = strings[a].letter(q);
      if (l != 'I') g.basis[q] = l;
    }
  }
  return plan;
}

double parity_expectation(const qsim::Counts& counts, const qsim::PauliString& p) {
  std::uint64_t total = 0;
  double acc = 0.0;
  const Det s = p.support();
  for (const auto& [b, c] : counts) {
    total += c;
    acc += (popcount(b & s) & 1 ? -1.0 : 1.0) * static_cast<double>(c);
  }
  if (total == 0) throw RdmError("no shots recorded for a measured string");
  return acc / static_cast<double>(total);
}

std::vector<double> string_expectations(const MeasurementPlan& plan, const std::vector<qsim::Counts>& counts) {
  if (counts.size() != plan.groups.size()) throw RdmError("one count table per measurement group is required");
  std::vector<double> v(plan.strings.size());
  for (std::size_t g = 0; g < plan.groups.size(); ++g) {
    if (counts[g].empty()) throw RdmError("empty counts for measurement group " + std::to_string(g));
    for (auto m : plan.groups[g].members) v[m] = parity_expectation(counts[g], plan.strings[m]);
  }
  return v;
}

ComplexRdm assemble_rdm(const RdmPauliTerms& terms, const std::vector<double>& values) {
  if (values.size() != terms.strings.size()) throw RdmError("value count differs from string count");
  ComplexRdm d(terms.order, terms.n_qubits);
  for (const auto& e : terms.elements) {
    Complex v = 0.0;
    for (const auto& [s, w] : e.parts) v += w * values[s];
    if (e.row == e.col) {
      d.matrix()(e.row, e.col) = v.real();
    } else {
      d.matrix()(e.row, e.col) = v;
      d.matrix()(e.col, e.row) = std::conj(v);
    }
  }
  return d;
}

ComplexRdm estimate_rdm(const RdmPauliTerms& terms, const MeasurementPlan& plan,
                        const std::vector<qsim::Counts>& counts) {
  if (plan.strings.size() != terms.strings.size()) throw RdmError("plan does not match the RDM terms");
  return assemble_rdm(terms, string_expectations(plan, counts));
}

void export_rdm(const ComplexRdm& d, std::ostream& data, std::ostream& manifest, double tol) {
  const auto& sub = d.subsets();
  char buf[64];
  std::size_t count = 0;
  for (Eigen::Index i = 0; i < d.dim(); ++i)
    for (Eigen::Index j = 0; j < d.dim(); ++j) {
      const Complex v = d.matrix()(i, j);
      if (std::abs(v) <= tol) continue;
      data << d.order();
      for (int p : bits_of(sub[i])) data << ' ' << p;
      for (int q : bits_of(sub[j])) data << ' ' << q;
      std::snprintf(buf, sizeof buf, " %.17g %.17g\n", v.real(), v.imag());
      data << buf;
      ++count;
    }
  nlohmann::ordered_json m;
  m["order"] = d.order();
  m["n_spin_orbitals"] = d.n();
  m["trace"] = {d.trace().real(), d.trace().imag()};
  m["entries"] = count;
  m["normalization"] = "1/k!";
  manifest << m.dump(2) << '\n';
}

ComplexRdm import_rdm(std::istream& data, int order, int n) {
  ComplexRdm d(order, n);
  std::string line;
  while (std::getline(data, line)) {
    std::istringstream is(line);
    int k;
    if (!(is >> k)) continue;
    if (k != order) throw RdmError("RDM order mismatch in dump");
    std::vector<int> p(k), q(k);
    for (int& x : p) is >> x;
    for (int& x : q) is >> x;
    double re, im;
    if (!(is >> re >> im)) throw RdmError("malformed RDM dump line");
    d.at(mask_of(p), mask_of(q)) = Complex(re, im);
  }
  return d;
}

}  // namespace ptvqe::rdm
