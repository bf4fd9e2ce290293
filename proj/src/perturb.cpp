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

#include "ptvqe/perturb.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include <Eigen/Eigenvalues>
#include <Eigen/Sparse>

#include "ptvqe/oracle.hpp"

namespace ptvqe::perturb {

namespace {

enum class Region { inactive, active, virt };

struct ClassInfo {
  const char* name;
  int n_upper;
  Region up[2];
  Region lo[2];
};

constexpr Region I = Region::inactive, A = Region::active, V = Region::virt;

const ClassInfo& info(ExcitationClass c) {
  static const ClassInfo table[] = {
      {"i_u", 1, {A, A}, {I, I}},   {"i_a", 1, {V, V}, {I, I}},   {"u_a", 1, {V, V}, {A, A}},
      {"ij_uv", 2, {A, A}, {I, I}}, {"ij_ab", 2, {V, V}, {I, I}}, {"uv_ab", 2, {V, V}, {A, A}},
      {"wi_uv", 2, {A, A}, {A, I}}, {"vi_au", 2, {V, A}, {A, I}}, {"vw_au", 2, {V, A}, {A, A}},
      {"ij_au", 2, {V, A}, {I, I}}, {"ui_ab", 2, {V, V}, {A, I}}, {"v_u", 1, {A, A}, {A, A}},
      {"wx_uv", 2, {A, A}, {A, A}},
  };
  return table[static_cast<int>(c)];
}

using Pairs = std::vector<std::array<int, 2>>;

Pairs ordered_pairs(const std::vector<int>& x) {
  Pairs out;
  for (std::size_t a = 0; a < x.size(); ++a)
    for (std::size_t b = a; b < x.size(); ++b) out.push_back({x[a], x[b]});
  return out;
}

Pairs cross_pairs(const std::vector<int>& x, const std::vector<int>& y) {
  Pairs out;
  for (int a : x)
    for (int b : y) out.push_back({a, b});
  return out;
}

int inversions(const std::vector<int>& v, bool descending) {
  int n = 0;
  for (std::size_t a = 0; a < v.size(); ++a)
    for (std::size_t b = a + 1; b < v.size(); ++b)
      if (descending ? v[a] < v[b] : v[a] > v[b]) ++n;
  return n;
}

Det low_bits(int n) { return n >= 64 ? ~Det{0} : (Det{1} << n) - 1; }

std::uint64_t factorial(int k) {
  std::uint64_t f = 1;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

// Canonical active string a+_cre(ascending) a_ann(descending).
struct Key {
  Det cre = 0;
  Det ann = 0;
  friend bool operator==(const Key&, const Key&) = default;
};

struct KeyHash {
  std::size_t operator()(const Key& k) const { return std::hash<Det>()(k.cre * 0x9e3779b97f4a7c15ULL ^ k.ann); }
};

// op(ca) = a+_C a_A with the canonical ordering; returns <psi| op(c1,a1) op(c2,a2) |psi>.
double pair_value(const RdmSet& d, Det c1, Det a1, Det c2, Det a2) {
  if (popcount(c1) + popcount(c2) != popcount(a1) + popcount(a2)) return 0.0;
  const Det common = a1 & c2;
  double total = 0.0;
  for (Det m = common;; m = (m - 1) & common) {
    const Det cr = c2 & ~m;
    const Det an = a1 & ~m;
    if (!(c1 & cr) && !(an & a2)) {
      int parity = 0;
      Det ra = a1, rc = c2;
      for (Det b = m; b; b &= b - 1) {
        const int p = std::countr_zero(b);
        const Det below = (Det{1} << p) - 1;
        parity += popcount(ra & below) + popcount(rc & below);
        ra &= ~(Det{1} << p);
        rc &= ~(Det{1} << p);
      }
      parity += popcount(an) * popcount(cr);
      for (Det b = cr; b; b &= b - 1) parity += popcount(c1 & ~low_bits(std::countr_zero(b) + 1));
      for (Det b = a2; b; b &= b - 1) parity += popcount(an & low_bits(std::countr_zero(b)));
      const double v = d.expectation(c1 | cr, an | a2);
      total += (parity & 1) ? -v : v;
    }
    if (m == 0) break;
  }
  return total;
}

// Splits a ladder product acting on the reference into an outer determinant
// and an active string.  Encoded ladders are 2 * orbital + dagger.
struct Split {
  Det outer = 0;
  double coeff = 0.0;
  std::vector<int> act;  // active register
};

class Splitter {
 public:
  Splitter(const PtSpace& s, int n_particles)
      : lo_(s.active_offset()), width_(2 * s.n_active), inactive_(s.inactive_mask()), active_(s.active_mask()),
        n_(n_particles) {}

  bool split(const Complex& c, const std::vector<Ladder>& ops, Split& out) const {
    std::vector<Ladder> outer;
    out.act.clear();
    int parity = 0;
    int outer_right = 0;
    for (auto it = ops.rbegin(); it != ops.rend(); ++it) {
      if (it->orbital >= lo_ && it->orbital < lo_ + width_) {
        parity += outer_right;
        out.act.push_back(2 * (it->orbital - lo_) + (it->dagger ? 1 : 0));
      } else {
        ++outer_right;
      }
    }
    std::reverse(out.act.begin(), out.act.end());
    for (const auto& l : ops)
      if (l.orbital < lo_ || l.orbital >= lo_ + width_) outer.push_back(l);
    int delta = 0;
    for (int e : out.act) delta += (e & 1) ? 1 : -1;
    const int np = n_ + delta;
    if (np < 0 || np > width_) return false;
    const Det base = inactive_ | (low_bits(np) << lo_);
    auto r = apply_ladders(outer, base);
    if (!r) return false;
    out.outer = r->first & ~active_;
    out.coeff = c.real() * r->second * ((parity & 1) ? -1.0 : 1.0);
    return true;
  }

 private:
  int lo_, width_;
  Det inactive_, active_;
  int n_;
};

// Normal-ordered active string to canonical masks; false if it vanishes.
bool canonical(const std::vector<int>& act, Key& key, int& sign) {
  std::vector<int> cr, an;
  bool seen_ann = false;
  for (int e : act) {
    if (e & 1) {
      if (seen_ann) throw PerturbError("active string is not normal ordered");
      cr.push_back(e >> 1);
    } else {
      seen_ann = true;
      an.push_back(e >> 1);
    }
  }
  key = {};
  for (int p : cr) {
    if (key.cre >> p & 1) return false;
    key.cre |= Det{1} << p;
  }
  for (int p : an) {
    if (key.ann >> p & 1) return false;
    key.ann |= Det{1} << p;
  }
  sign = ((inversions(cr, false) + inversions(an, true)) & 1) ? -1 : 1;
  return true;
}

using Group = std::unordered_map<Key, double, KeyHash>;
using Expansion = std::map<Det, Group>;

Expansion expand(const FermionOperator& op, const Splitter& sp, Det reference_outer) {
  Expansion out;
  if (op.constant != 0.0) out[reference_outer][Key{}] += op.constant.real();
  Split s;
  for (const auto& t : op.terms) {
    if (!sp.split(t.coeff, t.ops, s)) continue;
    Key k;
    int sign = 1;
    if (!canonical(s.act, k, sign)) continue;
    out[s.outer][k] += sign * s.coeff;
  }
  return out;
}

// rows(A) x rows(B) matrix of <A_a Psi0 | B_b Psi0>.
Eigen::MatrixXd inner(const RdmSet& rdms, const std::vector<Expansion>& a, const std::vector<Expansion>& b) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(a.size(), b.size());
  struct Side {
    std::vector<Key> keys;
    std::unordered_map<Key, int, KeyHash> index;
    std::vector<int> ops;
    std::vector<std::tuple<int, int, double>> entries;  // key, local op, coeff
  };
  auto collect = [](const std::vector<Expansion>& e) {
    std::map<Det, Side> sides;
    for (std::size_t o = 0; o < e.size(); ++o)
      for (const auto& [det, grp] : e[o]) {
        auto& s = sides[det];
        const int local = static_cast<int>(s.ops.size());
        s.ops.push_back(static_cast<int>(o));
        for (const auto& [k, c] : grp) {
          if (c == 0.0) continue;
          auto [it, fresh] = s.index.try_emplace(k, static_cast<int>(s.keys.size()));
          if (fresh) s.keys.push_back(k);
          s.entries.emplace_back(it->second, local, c);
        }
      }
    return sides;
  };
  auto sa = collect(a);
  auto sb = collect(b);
  for (auto& [det, left] : sa) {
    auto it = sb.find(det);
    if (it == sb.end()) continue;
    const auto& right = it->second;
    Eigen::MatrixXd xa = Eigen::MatrixXd::Zero(left.keys.size(), left.ops.size());
    Eigen::MatrixXd xb = Eigen::MatrixXd::Zero(right.keys.size(), right.ops.size());
    for (auto [k, o, c] : left.entries) xa(k, o) += c;
    for (auto [k, o, c] : right.entries) xb(k, o) += c;
    const auto ns = static_cast<Eigen::Index>(left.keys.size());
    const auto nt = static_cast<Eigen::Index>(right.keys.size());
    Eigen::MatrixXd gxb(ns, right.ops.size());
    constexpr Eigen::Index chunk = 256;
    Eigen::MatrixXd g(std::min(chunk, ns), nt);
    for (Eigen::Index s0 = 0; s0 < ns; s0 += chunk) {
      const Eigen::Index len = std::min(chunk, ns - s0);
      for (Eigen::Index s = 0; s < len; ++s) {
        const Key& ks = left.keys[s0 + s];
        for (Eigen::Index t = 0; t < nt; ++t) {
          const Key& kt = right.keys[t];
          g(s, t) = pair_value(rdms, ks.ann, ks.cre, kt.cre, kt.ann);
        }
      }
      gxb.middleRows(s0, len).noalias() = g.topRows(len) * xb;
    }
    const Eigen::MatrixXd block = xa.transpose() * gxb;
    for (std::size_t i = 0; i < left.ops.size(); ++i)
      for (std::size_t j = 0; j < right.ops.size(); ++j) out(left.ops[i], right.ops[j]) += block(i, j);
  }
  return out;
}

// Generic path: arbitrary active ladder sequences, normal ordered by
// repeated anticommutation.
using Terms = std::vector<std::tuple<double, Det, Det>>;

void normal_order(std::vector<int> s, double c, Terms& out) {
  for (std::size_t i = 0; i + 1 < s.size(); ++i) {
    if (!(s[i] & 1) && (s[i + 1] & 1)) {
      if ((s[i] >> 1) == (s[i + 1] >> 1)) {
        std::vector<int> t(s);
        t.erase(t.begin() + i, t.begin() + i + 2);
        normal_order(std::move(t), c, out);
      }
      std::swap(s[i], s[i + 1]);
      normal_order(std::move(s), -c, out);
      return;
    }
  }
  Key k;
  int sign = 1;
  if (canonical(s, k, sign)) out.emplace_back(sign * c, k.cre, k.ann);
}

using SeqGroup = std::map<std::vector<int>, double>;
using SeqExpansion = std::map<Det, SeqGroup>;

SeqExpansion expand_sequences(const std::vector<FermionTerm>& terms, Complex constant, const Splitter& sp,
                              Det reference_outer) {
  SeqExpansion out;
  if (constant != 0.0) out[reference_outer][{}] += constant.real();
  Split s;
  for (const auto& t : terms)
    if (sp.split(t.coeff, t.ops, s)) out[s.outer][s.act] += s.coeff;
  return out;
}

std::vector<FermionTerm> product(const FermionOperator& a, const FermionOperator& b) {
  std::vector<FermionTerm> out;
  auto with_constant = [](const FermionOperator& op) {
    auto t = op.terms;
    if (op.constant != 0.0) t.push_back({op.constant, {}});
    return t;
  };
  const auto ta = with_constant(a);
  const auto tb = with_constant(b);
  for (const auto& x : ta)
    for (const auto& y : tb) {
      FermionTerm t{x.coeff * y.coeff, x.ops};
      t.ops.insert(t.ops.end(), y.ops.begin(), y.ops.end());
      out.push_back(std::move(t));
    }
  return out;
}

double sequence_expectation(const RdmSet& rdms, const std::vector<int>& seq,
                            std::map<std::vector<int>, double>& cache) {
  int balance = 0;
  for (int e : seq) balance += (e & 1) ? 1 : -1;
  if (balance != 0) return 0.0;
  auto it = cache.find(seq);
  if (it != cache.end()) return it->second;
  Terms terms;
  normal_order(seq, 1.0, terms);
  double v = 0.0;
  for (auto [c, cr, an] : terms) v += c * rdms.expectation(cr, an);
  cache.emplace(seq, v);
  return v;
}

double inner_sequences(const RdmSet& rdms, const SeqExpansion& bra, const SeqExpansion& ket,
                       std::map<std::vector<int>, double>& cache) {
  double total = 0.0;
  for (const auto& [det, left] : bra) {
    auto it = ket.find(det);
    if (it == ket.end()) continue;
    for (const auto& [sl, cl] : left) {
      std::vector<int> adj(sl.rbegin(), sl.rend());
      for (int& e : adj) e ^= 1;
      for (const auto& [sr, cr] : it->second) {
        std::vector<int> seq(adj);
        seq.insert(seq.end(), sr.begin(), sr.end());
        total += cl * cr * sequence_expectation(rdms, seq, cache);
      }
    }
  }
  return total;
}

FermionOperator identity_operator() {
  FermionOperator op;
  op.constant = 1.0;
  return op;
}

FermionOperator operator_or_identity(const std::optional<ExcitationOp>& e, const PtSpace& space) {
  return e ? excitation_operator(*e, space) : identity_operator();
}

using SparseState = std::unordered_map<Det, double>;

SparseState apply_sparse(const FermionOperator& op, const SparseState& in) {
  SparseState out;
  if (op.constant != 0.0)
    for (const auto& [d, a] : in) out[d] += op.constant.real() * a;
  for (const auto& t : op.terms)
    for (const auto& [d, a] : in) {
      auto r = apply_ladders(t.ops, d);
      if (r) out[r->first] += t.coeff.real() * r->second * a;
    }
  return out;
}

double dot(const SparseState& a, const SparseState& b) {
  double s = 0.0;
  const auto& small = a.size() < b.size() ? a : b;
  const auto& large = a.size() < b.size() ? b : a;
  for (const auto& [d, x] : small) {
    auto it = large.find(d);
    if (it != large.end()) s += x * it->second;
  }
  return s;
}

}  // namespace

std::string to_string(ExcitationClass c) { return info(c).name; }

bool is_active_only(ExcitationClass c) { return c == ExcitationClass::v_u || c == ExcitationClass::wx_uv; }

std::string ExcitationOp::label() const {
  std::ostringstream os;
  os << to_string(cls) << '(' << lower[0];
  if (is_double()) os << ',' << lower[1];
  os << "->" << upper[0];
  if (is_double()) os << ',' << upper[1];
  os << ')';
  if (type == AdaptType::type1) os << "t1";
  if (type == AdaptType::type2) os << "t2";
  if (form == HermitianForm::anti_hermitian) os << 'A';
  return os.str();
}

std::vector<ExcitationOp> enumerate_excitations(const integrals::OrbitalPartition& part, bool restrict_3rdm) {
  using C = ExcitationClass;
  const auto& in = part.inactive;
  const auto& ac = part.active;
  const auto& vi = part.virtual_;
  const auto form = restrict_3rdm ? HermitianForm::plain : HermitianForm::anti_hermitian;
  std::vector<ExcitationOp> out;
  auto single = [&](C c, const std::vector<int>& lows, const std::vector<int>& ups) {
    for (int q : lows)
      for (int p : ups) out.push_back({c, {p, -1}, {q, -1}, AdaptType::none, form});
  };
  auto dbl = [&](C c, const Pairs& ups, const Pairs& lows) {
    for (const auto& u : ups)
      for (const auto& l : lows) {
        out.push_back({c, u, l, AdaptType::type1, form});
        if (u[0] != u[1] && l[0] != l[1]) out.push_back({c, u, l, AdaptType::type2, form});
      }
  };
  single(C::i_u, in, ac);
  single(C::i_a, in, vi);
  single(C::u_a, ac, vi);
  dbl(C::ij_uv, ordered_pairs(ac), ordered_pairs(in));
  dbl(C::ij_ab, ordered_pairs(vi), ordered_pairs(in));
  dbl(C::uv_ab, ordered_pairs(vi), ordered_pairs(ac));
  dbl(C::wi_uv, ordered_pairs(ac), cross_pairs(ac, in));
  dbl(C::vi_au, cross_pairs(vi, ac), cross_pairs(ac, in));
  dbl(C::vw_au, cross_pairs(vi, ac), ordered_pairs(ac));
  dbl(C::ij_au, cross_pairs(vi, ac), ordered_pairs(in));
  dbl(C::ui_ab, ordered_pairs(vi), cross_pairs(ac, in));
  if (!restrict_3rdm) {
    for (std::size_t a = 0; a < ac.size(); ++a)
      for (std::size_t b = a + 1; b < ac.size(); ++b)
        out.push_back({C::v_u, {ac[a], -1}, {ac[b], -1}, AdaptType::none, form});
    const auto pairs = ordered_pairs(ac);
    for (std::size_t x = 0; x < pairs.size(); ++x)
      for (std::size_t y = x + 1; y < pairs.size(); ++y) {
        const auto& u = pairs[x];
        const auto& l = pairs[y];
        out.push_back({C::wx_uv, u, l, AdaptType::type1, form});
        if (u[0] != u[1] && l[0] != l[1]) out.push_back({C::wx_uv, u, l, AdaptType::type2, form});
      }
  }
  return out;
}

int PtSpace::register_orbital(int original) const {
  auto it = std::find(orbitals.begin(), orbitals.end(), original);
  if (it == orbitals.end()) throw PerturbError("orbital " + std::to_string(original) + " is not in the register");
  return static_cast<int>(it - orbitals.begin());
}

Det PtSpace::inactive_mask() const { return low_bits(2 * n_inactive); }

Det PtSpace::active_mask() const { return low_bits(2 * n_active) << active_offset(); }

PtSpace make_pt_space(const integrals::IntegralSet& ints, const integrals::OrbitalPartition& part) {
  PtSpace s;
  s.partition = part;
  s.orbitals = part.inactive;
  s.orbitals.insert(s.orbitals.end(), part.active.begin(), part.active.end());
  s.orbitals.insert(s.orbitals.end(), part.virtual_.begin(), part.virtual_.end());
  s.n_inactive = static_cast<int>(part.inactive.size());
  s.n_active = static_cast<int>(part.active.size());
  s.n_virtual = static_cast<int>(part.virtual_.size());
  if (s.n_spin() > 64) throw PerturbError("perturbative register exceeds 64 spin orbitals");
  s.ints = integrals::fold_orbitals(ints, part.frozen, s.orbitals);
  s.hamiltonian = integrals::spin_orbital_terms(s.ints);
  return s;
}

FermionOperator excitation_operator(const ExcitationOp& e, const PtSpace& space) {
  const auto& ci = info(e.cls);
  if ((ci.n_upper == 2) != e.is_double()) throw PerturbError(std::string("adaptation type does not match class ") + ci.name);
  auto region = [&](int orb) {
    const int r = space.register_orbital(orb);
    if (r < space.n_inactive) return Region::inactive;
    return r < space.n_inactive + space.n_active ? Region::active : Region::virt;
  };
  for (int k = 0; k < ci.n_upper; ++k)
    if (region(e.upper[k]) != ci.up[k] || region(e.lower[k]) != ci.lo[k])
      throw PerturbError("indices do not match class " + e.label());
  if (e.type == AdaptType::type2 && (e.upper[0] == e.upper[1] || e.lower[0] == e.lower[1]))
    throw PerturbError("type2 needs distinct pairs: " + e.label());

  auto so = [&](int orb, int spin) { return 2 * space.register_orbital(orb) + spin; };
  FermionOperator op;
  if (!e.is_double()) {
    for (int s = 0; s < 2; ++s) op.terms.push_back({1.0, {cre(so(e.upper[0], s)), ann(so(e.lower[0], s))}});
  } else {
    auto e2 = [&](int p, int q, int r, int s, double c) {
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
          const int P = so(p, a), Q = so(q, b), R = so(r, a), S = so(s, b);
          if (P == Q || R == S) continue;
          op.terms.push_back({c, {cre(P), cre(Q), ann(S), ann(R)}});
        }
    };
    const auto [p, q] = e.upper;
    const auto [r, s] = e.lower;
    e2(p, q, r, s, 1.0);
    e2(p, q, s, r, e.type == AdaptType::type1 ? 1.0 : -1.0);
  }
  if (e.form == HermitianForm::anti_hermitian) {
    const std::size_t n = op.terms.size();
    for (std::size_t k = 0; k < n; ++k) {
      auto t = adjoint(op.terms[k]);
      t.coeff = -t.coeff;
      op.terms.push_back(std::move(t));
    }
  }
  return op;
}

std::vector<std::pair<Det, double>> embed_reference(const PtSpace& space, const Reference& ref) {
  std::vector<std::pair<Det, double>> out;
  for (std::size_t k = 0; k < ref.dets.size(); ++k)
    if (ref.amps(k) != 0.0) out.emplace_back(space.inactive_mask() | (ref.dets[k] << space.active_offset()), ref.amps(k));
  return out;
}

RdmSet RdmSet::from_reference(const Reference& ref, int n_spin, int max_order) {
  RdmSet s(n_spin, ref.n_electrons);
  for (int k = 1; k <= std::min(max_order, ref.n_electrons); ++k)
    s.set(rdm::compute_rdm<double>(ref.dets, ref.amps, n_spin, k));
  return s;
}

void RdmSet::set(rdm::RealRdm d) {
  if (d.n() != n_spin_) throw PerturbError("RDM register size mismatch");
  const int k = d.order();
  if (k < 1 || k >= static_cast<int>(reads_.size())) throw PerturbError("unsupported RDM order");
  if (static_cast<int>(d_.size()) <= k) d_.resize(k + 1);
  d_[k] = std::move(d);
}

bool RdmSet::has(int k) const { return k < static_cast<int>(d_.size()) && d_[k].has_value(); }

const rdm::RealRdm& RdmSet::get(int k) const {
  if (!has(k)) throw MissingRdmOrder("missing " + std::to_string(k) + "-RDM");
  return *d_[k];
}

double RdmSet::expectation(Det upper, Det lower) const {
  const int k = popcount(upper);
  if (popcount(lower) != k) return 0.0;
  if (k == 0) return 1.0;
  if (k > n_particles_) return 0.0;
  const auto& d = get(k);
  ++reads_[k];
  return static_cast<double>(factorial(k)) * d.at(upper, lower);
}

int RdmSet::max_order_read() const {
  int m = 0;
  for (int k = 0; k < static_cast<int>(reads_.size()); ++k)
    if (reads_[k]) m = k;
  return m;
}

ContractionEngine::ContractionEngine(const PtSpace& space, const RdmSet& rdms) : space_(space), rdms_(rdms) {
  if (rdms.n_spin() != 2 * space.n_active) throw PerturbError("RDMs do not match the active register");
}

double ContractionEngine::bracket(const FermionOperator& left, const FermionOperator& middle,
                                  const FermionOperator& right) const {
  const Splitter sp(space_, rdms_.n_particles());
  const Det ref = space_.inactive_mask();
  auto bra = expand_sequences(left.terms, left.constant, sp, ref);
  auto ket = expand_sequences(product(middle, right), 0.0, sp, ref);
  std::map<std::vector<int>, double> cache;
  return inner_sequences(rdms_, bra, ket, cache);
}

double ContractionEngine::matrix_element(const std::optional<ExcitationOp>& mu,
                                         const std::optional<ExcitationOp>& nu) const {
  return bracket(operator_or_identity(mu, space_), space_.hamiltonian, operator_or_identity(nu, space_));
}

double ContractionEngine::energy() const {
  return couplings({identity_operator()})(0);
}

Eigen::MatrixXd ContractionEngine::overlap_matrix(const std::vector<FermionOperator>& ops) const {
  const Splitter sp(space_, rdms_.n_particles());
  std::vector<Expansion> e;
  for (const auto& op : ops) e.push_back(expand(op, sp, space_.inactive_mask()));
  Eigen::MatrixXd s = inner(rdms_, e, e);
  return 0.5 * (s + s.transpose());
}

Eigen::VectorXd ContractionEngine::couplings(const std::vector<FermionOperator>& ops) const {
  const Splitter sp(space_, rdms_.n_particles());
  std::vector<Expansion> e;
  for (const auto& op : ops) e.push_back(expand(op, sp, space_.inactive_mask()));
  return inner(rdms_, e, {expand(space_.hamiltonian, sp, space_.inactive_mask())}).col(0);
}

Eigen::VectorXd ContractionEngine::reference_overlaps(const std::vector<FermionOperator>& ops) const {
  const Splitter sp(space_, rdms_.n_particles());
  std::vector<Expansion> e;
  for (const auto& op : ops) e.push_back(expand(op, sp, space_.inactive_mask()));
  return inner(rdms_, e, {expand(identity_operator(), sp, space_.inactive_mask())}).col(0);
}

Eigen::MatrixXd ContractionEngine::hamiltonian_matrix(const std::vector<FermionOperator>& ops) const {
  const Splitter sp(space_, rdms_.n_particles());
  const Det ref = space_.inactive_mask();
  const auto n = static_cast<Eigen::Index>(ops.size());
  std::vector<SeqExpansion> bras, kets;
  for (const auto& op : ops) {
    bras.push_back(expand_sequences(op.terms, op.constant, sp, ref));
    kets.push_back(expand_sequences(product(space_.hamiltonian, op), 0.0, sp, ref));
  }
  std::map<std::vector<int>, double> cache;
  Eigen::MatrixXd h(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) h(i, j) = inner_sequences(rdms_, bras[i], kets[j], cache);
  return 0.5 * (h + h.transpose());
}

double brute_bracket(const PtSpace& space, const Reference& ref, const FermionOperator& left,
                     const FermionOperator& middle, const FermionOperator& right) {
  if (space.n_spin() > 20) throw PerturbError("register too large for the explicit bracket");
  SparseState psi;
  for (auto [d, a] : embed_reference(space, ref)) psi[d] += a;
  const auto ket = apply_sparse(middle, apply_sparse(right, psi));
  const auto bra = apply_sparse(left, psi);
  return dot(bra, ket);
}

double brute_matrix_element(const PtSpace& space, const Reference& ref, const std::optional<ExcitationOp>& mu,
                            const std::optional<ExcitationOp>& nu) {
  return brute_bracket(space, ref, operator_or_identity(mu, space), space.hamiltonian,
                       operator_or_identity(nu, space));
}

ActiveDensity pure_density(const Reference& ref) {
  ActiveDensity rho;
  rho.n_electrons = ref.n_electrons;
  rho.dets = ref.dets;
  rho.weights = {1.0};
  rho.states = {ref.amps};
  return rho;
}

ActiveDensity density_from_rdm(const rdm::RealRdm& d, int n_electrons) {
  if (d.order() != n_electrons) throw PerturbError("density needs the N-RDM of an N-particle state");
  ActiveDensity rho;
  rho.n_electrons = n_electrons;
  rho.dets = d.subsets();
  Eigen::MatrixXd m = static_cast<double>(factorial(n_electrons)) * d.matrix();
  m = 0.5 * (m + m.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  for (Eigen::Index k = 0; k < m.rows(); ++k)
    if (std::abs(es.eigenvalues()(k)) > 1e-14) {
      rho.weights.push_back(es.eigenvalues()(k));
      rho.states.push_back(es.eigenvectors().col(k));
    }
  return rho;
}

Eigen::MatrixXd density_hamiltonian(const PtSpace& space, const ActiveDensity& rho,
                                    const std::vector<FermionOperator>& ops) {
  const auto n = static_cast<Eigen::Index>(ops.size());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t c = 0; c < rho.states.size(); ++c) {
    Reference ref{rho.n_electrons, rho.dets, rho.states[c], 0.0};
    SparseState psi;
    for (auto [d, a] : embed_reference(space, ref)) psi[d] += a;
    std::vector<SparseState> cols;
    std::vector<Det> dets;
    for (const auto& op : ops) {
      cols.push_back(apply_sparse(op, psi));
      for (const auto& [d, a] : cols.back()) dets.push_back(d);
    }
    oracle::DeterminantSpace basis(std::move(dets));
    if (basis.size() == 0) continue;
    Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(basis.size(), n);
    for (Eigen::Index j = 0; j < n; ++j)
      for (const auto& [d, a] : cols[j]) phi(basis.index(d), j) += a;
    const Eigen::SparseMatrix<double> h = oracle::ci_hamiltonian(space.ints, basis);
    const Eigen::MatrixXd hphi = h * phi;
    out.noalias() += rho.weights[c] * (phi.transpose() * hphi);
  }
  return 0.5 * (out + out.transpose());
}

Orthonormalization orthonormalize(const Eigen::MatrixXd& S, double delta, OrthoMode mode) {
  const Eigen::Index n = S.rows();
  Orthonormalization r;
  if (n == 0) {
    r.X.resize(0, 0);
    return r;
  }
  if (mode == OrthoMode::canonical) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
    std::vector<Eigen::Index> keep;
    for (Eigen::Index k = 0; k < n; ++k)
      if (es.eigenvalues()(k) >= delta) keep.push_back(k);
    if (keep.empty()) throw PerturbError("all overlap directions dropped");
    r.X.resize(n, static_cast<Eigen::Index>(keep.size()));
    for (std::size_t j = 0; j < keep.size(); ++j) {
      r.X.col(j) = es.eigenvectors().col(keep[j]) / std::sqrt(es.eigenvalues()(keep[j]));
      Eigen::Index arg;
      es.eigenvectors().col(keep[j]).cwiseAbs().maxCoeff(&arg);
      r.column_label.push_back(static_cast<int>(arg));
    }
    r.kept.resize(n);
    std::iota(r.kept.begin(), r.kept.end(), 0);
    r.dropped_directions = static_cast<int>(n - keep.size());
    return r;
  }

  // connected blocks of S
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      if (S(i, j) != 0.0) parent[find(static_cast<int>(j))] = find(static_cast<int>(i));
  std::map<int, std::vector<int>> blocks;
  for (int i = 0; i < n; ++i) blocks[find(i)].push_back(i);

  std::vector<char> kept(n, 0);
  std::vector<std::pair<std::vector<int>, Eigen::MatrixXd>> pieces;
  for (const auto& [root, members] : blocks) {
    const auto m = static_cast<Eigen::Index>(members.size());
    Eigen::MatrixXd sb(m, m);
    for (Eigen::Index a = 0; a < m; ++a)
      for (Eigen::Index b = 0; b < m; ++b) sb(a, b) = S(members[a], members[b]);
    // pivoted Cholesky picks a well-conditioned subset
    Eigen::VectorXd resid = sb.diagonal();
    Eigen::MatrixXd L(m, 0);
    std::vector<int> sel;
    while (static_cast<Eigen::Index>(sel.size()) < m) {
      Eigen::Index k;
      const double best = resid.maxCoeff(&k);
      if (!(best >= delta)) break;
      Eigen::VectorXd col = sb.col(k);
      if (L.cols()) col -= L * L.row(k).transpose();
      col /= std::sqrt(best);
      L.conservativeResize(m, L.cols() + 1);
      L.col(L.cols() - 1) = col;
      resid -= col.cwiseAbs2();
      resid(k) = 0.0;
      for (int s : sel) resid(s) = 0.0;
      sel.push_back(static_cast<int>(k));
    }
    if (sel.empty()) continue;
    std::sort(sel.begin(), sel.end());
    const auto q = static_cast<Eigen::Index>(sel.size());
    Eigen::MatrixXd sk(q, q);
    for (Eigen::Index a = 0; a < q; ++a)
      for (Eigen::Index b = 0; b < q; ++b) sk(a, b) = sb(sel[a], sel[b]);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sk);
    const Eigen::MatrixXd inv_sqrt =
        es.eigenvectors() * es.eigenvalues().cwiseInverse().cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
    std::vector<int> global;
    for (int s : sel) {
      global.push_back(members[s]);
      kept[members[s]] = 1;
    }
    pieces.emplace_back(std::move(global), inv_sqrt);
  }
  for (int i = 0; i < n; ++i) (kept[i] ? r.kept : r.dropped).push_back(i);
  if (r.kept.empty()) throw PerturbError("all overlap directions dropped");
  r.dropped_directions = static_cast<int>(r.dropped.size());
  std::vector<int> column(n, -1);
  for (std::size_t j = 0; j < r.kept.size(); ++j) column[r.kept[j]] = static_cast<int>(j);
  r.X = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(r.kept.size()));
  for (const auto& [global, m] : pieces)
    for (std::size_t a = 0; a < global.size(); ++a)
      for (std::size_t b = 0; b < global.size(); ++b) r.X(global[a], column[global[b]]) = m(a, b);
  r.column_label = r.kept;
  return r;
}

Subspace build_subspace(const PtSpace& space, const RdmSet& rdms, const ActiveDensity& rho, double e_vqe,
                        const std::vector<ExcitationOp>& excitations, const PtOptions& opt) {
  Subspace sub;
  sub.excitations = excitations;
  std::vector<FermionOperator> ops;
  for (const auto& e : excitations) ops.push_back(excitation_operator(e, space));
  const ContractionEngine engine(space, rdms);
  rdms.reset_counters();
  sub.S = engine.overlap_matrix(ops);
  const Eigen::VectorXd cpl = engine.couplings(ops);
  const Eigen::VectorXd ro = engine.reference_overlaps(ops);
  sub.rdm_order_used = rdms.max_order_read();
  for (int k = 0; k < 8; ++k) sub.rdm_reads[k] = rdms.reads(k);

  const auto orth = orthonormalize(sub.S, opt.delta, opt.ortho);
  sub.X = orth.X;
  sub.column_label = orth.column_label;
  sub.dropped = orth.dropped;
  const Eigen::Index kp = sub.X.cols();
  Eigen::MatrixXd hb;
  if (kp > 0)
    hb = opt.hbar == HbarRoute::density ? density_hamiltonian(space, rho, ops) : engine.hamiltonian_matrix(ops);
  sub.H.resize(kp + 1, kp + 1);
  sub.H(0, 0) = e_vqe;
  if (kp > 0) {
    const Eigen::VectorXd c = sub.X.transpose() * cpl;
    sub.H.block(1, 0, kp, 1) = c;
    sub.H.block(0, 1, 1, kp) = c.transpose();
    const Eigen::MatrixXd ht = sub.X.transpose() * hb * sub.X;
    sub.H.block(1, 1, kp, kp) = 0.5 * (ht + ht.transpose());
  }
  sub.overlap.resize(kp + 1);
  sub.overlap(0) = 1.0;
  if (kp > 0) sub.overlap.tail(kp) = sub.X.transpose() * ro;
  sub.raw_diagonal.resize(kp);
  for (Eigen::Index j = 0; j < kp; ++j) {
    const int l = sub.column_label[j];
    sub.raw_diagonal(j) = hb(l, l) / sub.S(l, l);
  }
  return sub;
}

PtReport pt2(const Subspace& sub, const PtOptions& opt) {
  PtReport r;
  r.e_vqe = sub.H(0, 0);
  r.rdm_order_used = sub.rdm_order_used;
  r.rdm_reads = sub.rdm_reads;
  for (int d : sub.dropped) r.dropped.push_back(sub.excitations[d]);
  const Eigen::Index kp = sub.H.rows() - 1;
  for (Eigen::Index j = 1; j <= kp; ++j) {
    PtTerm t;
    t.excitation = sub.excitations[sub.column_label[j - 1]];
    const double c = sub.H(j, 0);
    t.numerator = c * c;
    const double emu = opt.raw_diagonal ? sub.raw_diagonal(j - 1) : sub.H(j, j);
    t.denominator = r.e_vqe - emu;
    if (std::abs(t.denominator) < opt.intruder_tol) {
      if (t.numerator >= opt.negligible_numerator)
        throw IntruderError("intruder state at " + t.excitation.label() + ": denominator " +
                            std::to_string(t.denominator));
      t.skipped = true;
      r.skipped.push_back(t.excitation);
    } else {
      t.w = t.numerator / t.denominator;
    }
    r.terms.push_back(t);
  }
  for (const auto& t : r.terms) r.e2 += t.w;
  r.e0 = r.e_vqe + r.e2;
  const Eigen::VectorXd& o = sub.overlap;
  r.e1 = o.dot(sub.H * o) - (o.array().square() * sub.H.diagonal().array()).sum();
  return r;
}

std::vector<ExcitationOp> screen(const PtReport& report, double threshold) {
  std::vector<const PtTerm*> keep;
  for (const auto& t : report.terms)
    if (std::abs(t.w) >= threshold) keep.push_back(&t);
  auto key = [](const ExcitationOp& e) {
    return std::make_tuple(static_cast<int>(e.cls), e.upper, e.lower, static_cast<int>(e.type));
  };
  std::stable_sort(keep.begin(), keep.end(), [&](const PtTerm* a, const PtTerm* b) {
    if (std::abs(a->w) != std::abs(b->w)) return std::abs(a->w) > std::abs(b->w);
    return key(a->excitation) < key(b->excitation);
  });
  std::vector<ExcitationOp> out;
  for (const auto* t : keep) out.push_back(t->excitation);
  return out;
}

SubspaceSolution subspace_solve(const Subspace& sub) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sub.H);
  if (es.info() != Eigen::Success) throw PerturbError("subspace eigensolver failed");
  SubspaceSolution s;
  s.e0 = es.eigenvalues()(0);
  s.d = es.eigenvectors().col(0);
  if (s.d(0) < 0) s.d = -s.d;
  return s;
}

nlohmann::json to_json(const ExcitationOp& e) {
  nlohmann::json j;
  j["class"] = to_string(e.cls);
  j["upper"] = e.is_double() ? std::vector<int>{e.upper[0], e.upper[1]} : std::vector<int>{e.upper[0]};
  j["lower"] = e.is_double() ? std::vector<int>{e.lower[0], e.lower[1]} : std::vector<int>{e.lower[0]};
  j["type"] = e.type == AdaptType::none ? "none" : e.type == AdaptType::type1 ? "type1" : "type2";
  j["form"] = e.form == HermitianForm::plain ? "plain" : "anti_hermitian";
  return j;
}

nlohmann::json to_json(const PtReport& r) {
  nlohmann::json j;
  j["e_vqe"] = r.e_vqe;
  j["e1"] = r.e1;
  j["e2"] = r.e2;
  j["e0"] = r.e0;
  j["rdm_order_used"] = r.rdm_order_used;
  j["rdm_reads"] = std::vector<long>(r.rdm_reads.begin(), r.rdm_reads.end());
  auto& terms = j["terms"] = nlohmann::json::array();
  for (const auto& t : r.terms) {
    auto x = to_json(t.excitation);
    x["numerator"] = t.numerator;
    x["denominator"] = t.denominator;
    x["w"] = t.w;
    x["skipped"] = t.skipped;
    terms.push_back(std::move(x));
  }
  auto& dropped = j["dropped"] = nlohmann::json::array();
  for (const auto& e : r.dropped) dropped.push_back(to_json(e));
  return j;
}

}  // namespace ptvqe::perturb
