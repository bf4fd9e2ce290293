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

// Second-quantized building blocks shared by every module.
//
// Spin orbitals are interleaved: so = 2 * spatial + spin, spin 0 = up.
// Determinants are 64-bit occupation masks; bit p is spin orbital p and
// the phase convention is Jordan-Wigner ordering by index.
#pragma once

#include <bit>
#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ptvqe {

using Complex = std::complex<double>;
using Det = std::uint64_t;

inline constexpr int spin_orbital(int spatial, int spin) { return 2 * spatial + spin; }

inline int popcount(Det d) { return std::popcount(d); }

/// Parity of the occupied orbitals strictly below p.
inline int parity_below(Det d, int p) {
  return std::popcount(d & ((Det{1} << p) - 1)) & 1;
}

struct Ladder {
  int orbital = 0;
  bool dagger = false;

  friend bool operator==(const Ladder&, const Ladder&) = default;
};

inline Ladder cre(int p) { return {p, true}; }
inline Ladder ann(int p) { return {p, false}; }

/// A product of ladder operators, leftmost first: ops[0] acts last.
struct FermionTerm {
  Complex coeff{1.0, 0.0};
  std::vector<Ladder> ops;
};

/// Sum of ladder products plus a scalar.
struct FermionOperator {
  Complex constant{0.0, 0.0};
  std::vector<FermionTerm> terms;

  FermionOperator adjoint() const;
  int max_orbital() const;
};

FermionTerm adjoint(const FermionTerm& t);

/// Applies ops (rightmost first) to a determinant; nullopt if annihilated.
inline std::optional<std::pair<Det, int>> apply_ladders(const Ladder* ops, int n, Det d) {
  int sign = 1;
  for (int k = n - 1; k >= 0; --k) {
    const Det bit = Det{1} << ops[k].orbital;
    if (ops[k].dagger == bool(d & bit)) return std::nullopt;
    if (parity_below(d, ops[k].orbital)) sign = -sign;
    d ^= bit;
  }
  return std::make_pair(d, sign);
}

inline std::optional<std::pair<Det, int>> apply_ladders(const std::vector<Ladder>& ops, Det d) {
  return apply_ladders(ops.data(), static_cast<int>(ops.size()), d);
}

std::string to_string(const std::vector<Ladder>& ops);

/// Binomial coefficient, exact for the small arguments used here.
std::uint64_t binomial(int n, int k);

/// Enumerates the k-subsets of {0..n-1} in lexicographic order as bitmasks.
std::vector<Det> k_subsets(int n, int k);

}  // namespace ptvqe
