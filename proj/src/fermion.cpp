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

#include "ptvqe/fermion.hpp"

#include <algorithm>
#include <sstream>

namespace ptvqe {

FermionTerm adjoint(const FermionTerm& t) {
  FermionTerm out;
  out.coeff = std::conj(t.coeff);
  out.ops.reserve(t.ops.size());
  for (auto it = t.ops.rbegin(); it != t.ops.rend(); ++it) out.ops.push_back({it->orbital, !it->dagger});
  return out;
}

FermionOperator FermionOperator::adjoint() const {
  FermionOperator out;
  out.constant = std::conj(constant);
  out.terms.reserve(terms.size());
  for (const auto& t : terms) out.terms.push_back(ptvqe::adjoint(t));
  return out;
}

int FermionOperator::max_orbital() const {
  int m = -1;
  for (const auto& t : terms)
    for (const auto& op : t.ops) m = std::max(m, op.orbital);
  return m;
}

std::string to_string(const std::vector<Ladder>& ops) {
  std::ostringstream os;
  for (std::size_t k = 0; k < ops.size(); ++k) {
    if (k) os << ' ';
    os << (ops[k].dagger ? "a+" : "a") << ops[k].orbital;
  }
  return os.str();
}

std::uint64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
  return r;
}

std::vector<Det> k_subsets(int n, int k) {
  std::vector<Det> out;
  if (k < 0 || k > n) return out;
  std::vector<int> idx(k);
  for (int i = 0; i < k; ++i) idx[i] = i;
  while (true) {
    Det m = 0;
    for (int i : idx) m |= Det{1} << i;
    out.push_back(m);
    int i = k - 1;
    while (i >= 0 && idx[i] == n - k + i) --i;
    if (i < 0) break;
    ++idx[i];
    for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
  return out;
}

}  // namespace ptvqe
