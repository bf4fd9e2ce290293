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

#include "ptvqe/integrals.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <array>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

namespace ptvqe::integrals {

void Eri::set(int p, int q, int r, int s, double value) {
  v_[index(p, q, r, s)] = value;
  v_[index(q, p, r, s)] = value;
  v_[index(p, q, s, r)] = value;
  v_[index(q, p, s, r)] = value;
  v_[index(r, s, p, q)] = value;
  v_[index(s, r, p, q)] = value;
  v_[index(r, s, q, p)] = value;
  v_[index(s, r, q, p)] = value;
}

namespace {

std::string upper(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

double parse_real(std::string tok, int line) {
  for (auto& c : tok)
    if (c == 'd' || c == 'D') c = 'E';
  try {
    std::size_t used = 0;
    double v = std::stod(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw FcidumpError("line " + std::to_string(line) + ": bad number '" + tok + "'");
  }
}

// key -> list of values from the namelist body
std::map<std::string, std::vector<std::string>> parse_namelist(const std::string& body) {
  std::map<std::string, std::vector<std::string>> out;
  std::string text = body;
  for (auto& c : text)
    if (c == ',' || c == '\n' || c == '\r' || c == '\t') c = ' ';
  std::string key;
  std::istringstream is(text);
  std::string tok;
  std::vector<std::string> toks;
  while (is >> tok) {
    auto eq = tok.find('=');
    if (eq == std::string::npos) {
      toks.push_back(tok);
      continue;
    }
    // a token may carry "KEY=VALUE", "KEY=" or "=VALUE"
    std::string lhs = tok.substr(0, eq), rhs = tok.substr(eq + 1);
    if (!lhs.empty()) {
      toks.push_back(lhs);
    }
    toks.push_back("=");
    if (!rhs.empty()) toks.push_back(rhs);
  }
  for (std::size_t k = 0; k < toks.size(); ++k) {
    if (k + 1 < toks.size() && toks[k + 1] == "=") {
      key = upper(toks[k]);
      out[key];
      ++k;
      continue;
    }
    if (toks[k] == "=" || key.empty()) throw FcidumpError("malformed header near '" + toks[k] + "'");
    out[key].push_back(toks[k]);
  }
  return out;
}

int header_int(const std::map<std::string, std::vector<std::string>>& nl, const std::string& key, bool required,
               int fallback) {
  auto it = nl.find(key);
  if (it == nl.end() || it->second.empty()) {
    if (required) throw FcidumpError("header is missing " + key);
    return fallback;
  }
  try {
    return std::stoi(it->second.front());
  } catch (const std::exception&) {
    throw FcidumpError("header value for " + key + " is not an integer");
  }
}

}  // namespace

IntegralSet parse_fcidump(std::istream& in) {
  std::string line;
  int lineno = 0;
  std::string header;
  bool started = false, finished = false;
  while (!finished && std::getline(in, line)) {
    ++lineno;
    std::string u = upper(line);
    if (!started) {
      auto pos = u.find("&FCI");
      if (pos == std::string::npos) {
        if (u.find_first_not_of(" \t\r") == std::string::npos) continue;
        throw FcidumpError("line " + std::to_string(lineno) + ": expected &FCI header");
      }
      started = true;
      u = u.substr(pos + 4);
    }
    auto end = u.find("&END");
    auto slash = u.find('/');
    auto stop = std::min(end, slash);
    if (stop != std::string::npos) {
      header += u.substr(0, stop);
      finished = true;
    } else {
      header += u + "\n";
    }
  }
  if (!finished) throw FcidumpError("unterminated &FCI header");

  auto nl = parse_namelist(header);
  IntegralSet out;
  out.n_orbitals = header_int(nl, "NORB", true, 0);
  out.n_electrons = header_int(nl, "NELEC", true, 0);
  out.ms2 = header_int(nl, "MS2", false, 0);
  out.isym = header_int(nl, "ISYM", false, 1);
  if (out.n_orbitals <= 0) throw FcidumpError("NORB must be positive");
  if (out.n_electrons < 0 || out.n_electrons > 2 * out.n_orbitals) throw FcidumpError("NELEC out of range");
  if (auto it = nl.find("ORBSYM"); it != nl.end()) {
    for (const auto& v : it->second) out.orbsym.push_back(std::stoi(v));
    if (static_cast<int>(out.orbsym.size()) != out.n_orbitals)
      throw FcidumpError("ORBSYM length differs from NORB");
  }

  const int n = out.n_orbitals;
  out.h1 = Eigen::MatrixXd::Zero(n, n);
  out.h2 = Eri(n);
  std::map<std::array<int, 4>, double> seen2;
  std::map<std::pair<int, int>, double> seen1;
  bool have_core = false;

  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream is(line);
    std::string vtok;
    if (!(is >> vtok)) continue;
    int idx[4];
    for (int& x : idx)
      if (!(is >> x)) throw FcidumpError("line " + std::to_string(lineno) + ": expected value and four indices");
    const double v = parse_real(vtok, lineno);
    for (int x : idx)
      if (x < 0 || x > n) throw FcidumpError("line " + std::to_string(lineno) + ": index out of range");
    auto [i, j, k, l] = idx;
    auto clash = [&](double old) {
      if (std::abs(old - v) > 1e-12)
        throw FcidumpError("line " + std::to_string(lineno) + ": inconsistent duplicate entry");
    };
    if (i && j && k && l) {
      int p = i - 1, q = j - 1, r = k - 1, s = l - 1;
      if (p < q) std::swap(p, q);
      if (r < s) std::swap(r, s);
      std::array<int, 4> key{p, q, r, s};
      if (std::make_pair(p, q) < std::make_pair(r, s)) key = {r, s, p, q};
      if (auto it = seen2.find(key); it != seen2.end()) clash(it->second);
      seen2[key] = v;
      out.h2.set(key[0], key[1], key[2], key[3], v);
    } else if (i && j && !k && !l) {
      const std::pair<int, int> key = std::minmax(i - 1, j - 1);
      if (auto it = seen1.find(key); it != seen1.end()) clash(it->second);
      seen1[key] = v;
      out.h1(key.first, key.second) = v;
      out.h1(key.second, key.first) = v;
    } else if (!i && !j && !k && !l) {
      if (have_core) clash(out.core);
      out.core = v;
      have_core = true;
    } else if (i && !j && !k && !l) {
      // orbital energy record, carries no Hamiltonian content
    } else {
      throw FcidumpError("line " + std::to_string(lineno) + ": unrecognized index pattern");
    }
  }
  return out;
}

IntegralSet read_fcidump(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw FcidumpError("cannot open " + path);
  return parse_fcidump(f);
}

void write_fcidump(const IntegralSet& ints, std::ostream& out) {
  const int n = ints.n_orbitals;
  out << " &FCI NORB=" << n << ",NELEC=" << ints.n_electrons << ",MS2=" << ints.ms2 << ",\n  ORBSYM=";
  for (int p = 0; p < n; ++p) out << (ints.orbsym.empty() ? 1 : ints.orbsym[p]) << ',';
  out << "\n  ISYM=" << ints.isym << ",\n &END\n";
  char buf[96];
  auto emit = [&](double v, int i, int j, int k, int l) {
    std::snprintf(buf, sizeof buf, "%24.16e %4d %4d %4d %4d\n", v, i, j, k, l);
    out << buf;
  };
  for (int p = 0; p < n; ++p)
    for (int q = 0; q <= p; ++q)
      for (int r = 0; r <= p; ++r)
        for (int s = 0; s <= r; ++s) {
          if (p * (p + 1) / 2 + q < r * (r + 1) / 2 + s) continue;
          const double v = ints.h2(p, q, r, s);
          if (v != 0.0) emit(v, p + 1, q + 1, r + 1, s + 1);
        }
  for (int p = 0; p < n; ++p)
    for (int q = 0; q <= p; ++q)
      if (ints.h1(p, q) != 0.0) emit(ints.h1(p, q), p + 1, q + 1, 0, 0);
  emit(ints.core, 0, 0, 0, 0);
}

OrbitalPartition partition_orbitals(int n_orbitals, const std::vector<int>& frozen,
                                    const std::vector<int>& inactive, const std::vector<int>& active) {
  std::vector<char> used(static_cast<std::size_t>(std::max(n_orbitals, 0)), 0);
  for (const auto* list : {&frozen, &inactive, &active})
    for (int p : *list) {
      if (p < 0 || p >= n_orbitals) throw PartitionError("orbital index " + std::to_string(p) + " out of range");
      if (used[p]) throw PartitionError("orbital " + std::to_string(p) + " appears in more than one space");
      used[p] = 1;
    }
  OrbitalPartition part{frozen, inactive, active, {}};
  for (int p = 0; p < n_orbitals; ++p)
    if (!used[p]) part.virtual_.push_back(p);
  return part;
}

IntegralSet fold_orbitals(const IntegralSet& ints, const std::vector<int>& core, const std::vector<int>& keep) {
  const int m = static_cast<int>(keep.size());
  IntegralSet out;
  out.n_orbitals = m;
  out.n_electrons = ints.n_electrons - 2 * static_cast<int>(core.size());
  out.ms2 = ints.ms2;
  out.isym = ints.isym;
  for (int p : keep)
    if (!ints.orbsym.empty()) out.orbsym.push_back(ints.orbsym[p]);
  const auto& h = ints.h1;
  const auto& g = ints.h2;

  double e = ints.core;
  for (int i : core) {
    e += 2.0 * h(i, i);
    for (int j : core) e += 2.0 * g(i, i, j, j) - g(i, j, j, i);
  }
  out.core = e;
  out.h1.resize(m, m);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) {
      const int u = keep[a], v = keep[b];
      double f = h(u, v);
      for (int i : core) f += 2.0 * g(u, v, i, i) - g(u, i, i, v);
      out.h1(a, b) = f;
    }
  out.h2 = Eri(m);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b <= a; ++b)
      for (int c = 0; c < m; ++c)
        for (int d = 0; d <= c; ++d) out.h2.set(a, b, c, d, g(keep[a], keep[b], keep[c], keep[d]));
  return out;
}

IntegralSet to_integral_set(const ActiveHamiltonian& h) {
  IntegralSet ints;
  ints.n_orbitals = h.n_orbitals();
  ints.n_electrons = h.n_electrons;
  ints.h1 = h.f1;
  ints.h2 = h.v2;
  ints.core = h.e_core;
  return ints;
}

ActiveHamiltonian fold_core(const IntegralSet& ints, const OrbitalPartition& part) {
  std::vector<int> core = part.frozen;
  core.insert(core.end(), part.inactive.begin(), part.inactive.end());
  IntegralSet f = fold_orbitals(ints, core, part.active);
  return {f.core, std::move(f.h1), std::move(f.h2), f.n_electrons};
}

double antisym(const Eri& g, int p, int q, int r, int s) {
  auto direct = [&](int a, int b, int c, int d) {
    // <ab|cd> = (ac|bd) for matching spins
    if ((a & 1) != (c & 1) || (b & 1) != (d & 1)) return 0.0;
    return g(a >> 1, c >> 1, b >> 1, d >> 1);
  };
  return direct(p, q, r, s) - direct(p, q, s, r);
}

namespace {

FermionOperator build_terms(double constant, const Eigen::MatrixXd& h1, const Eri& g, double tol) {
  const int nso = 2 * static_cast<int>(h1.rows());
  FermionOperator op;
  op.constant = constant;
  for (int p = 0; p < nso; ++p)
    for (int q = 0; q < nso; ++q) {
      if ((p & 1) != (q & 1)) continue;
      const double v = h1(p >> 1, q >> 1);
      if (std::abs(v) > tol && v != 0.0) op.terms.push_back({v, {cre(p), ann(q)}});
    }
  for (int p = 0; p < nso; ++p)
    for (int q = p + 1; q < nso; ++q)
      for (int r = 0; r < nso; ++r)
        for (int s = r + 1; s < nso; ++s) {
          const double v = antisym(g, p, q, r, s);
          if (std::abs(v) > tol && v != 0.0) op.terms.push_back({v, {cre(p), cre(q), ann(s), ann(r)}});
        }
  return op;
}

}  // namespace

FermionOperator spin_orbital_terms(const ActiveHamiltonian& h, double tol) {
  return build_terms(h.e_core, h.f1, h.v2, tol);
}

FermionOperator spin_orbital_terms(const IntegralSet& ints, double tol) {
  return build_terms(ints.core, ints.h1, ints.h2, tol);
}

}  // namespace ptvqe::integrals
