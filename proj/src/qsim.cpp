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

#include "ptvqe/qsim.hpp"

#include <algorithm>
#include <cmath>

namespace ptvqe::qsim {

namespace {

const Complex kIPow[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};

// exponent of i picked up by sigma(x1,z1) * sigma(x2,z2) on one qubit
int product_phase(int x1, int z1, int x2, int z2) {
  if (x1 == 0 && z1 == 0) return 0;
  if (x1 == 1 && z1 == 1) return z2 - x2;
  if (x1 == 1) return z2 * (2 * x2 - 1);
  return x2 * (1 - 2 * z2);
}

void check_qubit(int q, int n) {
  if (q < 0 || q >= n) throw QsimError("qubit index " + std::to_string(q) + " outside register of " + std::to_string(n));
}

}  // namespace

PauliString PauliString::parse(const std::string& text) {
  std::string s = text;
  int phase = 0;
  if (!s.empty() && (s[0] == '-' || s[0] == '+')) {
    if (s[0] == '-') phase = 2;
    s.erase(0, 1);
  }
  if (!s.empty() && s[0] == 'i') {
    phase = (phase + 1) % 4;
    s.erase(0, 1);
  }
  PauliString p{static_cast<int>(s.size()), 0, 0, phase};
  if (p.n_qubits > 64) throw QsimError("register exceeds 64 qubits");
  for (int q = 0; q < p.n_qubits; ++q) {
    const Det bit = Det{1} << q;
    switch (s[q]) {
      case 'I': break;
      case 'X': p.x |= bit; break;
      case 'Z': p.z |= bit; break;
      case 'Y': p.x |= bit; p.z |= bit; break;
      default: throw QsimError("bad Pauli letter in '" + text + "'");
    }
  }
  return p;
}

PauliString PauliString::single(int n, int q, char letter) {
  check_qubit(q, n);
  std::string s(n, 'I');
  s[q] = letter;
  return parse(s);
}

char PauliString::letter(int q) const {
  const bool bx = (x >> q) & 1, bz = (z >> q) & 1;
  if (bx && bz) return 'Y';
  if (bx) return 'X';
  if (bz) return 'Z';
  return 'I';
}

std::string PauliString::letters() const {
  std::string s(n_qubits, 'I');
  for (int q = 0; q < n_qubits; ++q) s[q] = letter(q);
  return s;
}

Complex PauliString::phase_factor() const { return kIPow[phase & 3]; }

PauliString operator*(const PauliString& a, const PauliString& b) {
  if (a.n_qubits != b.n_qubits) throw QsimError("Pauli strings on different registers");
  int ph = a.phase + b.phase;
  const Det both = a.support() & b.support();
  for (int q = 0; q < a.n_qubits; ++q)
    if ((both >> q) & 1) ph += product_phase((a.x >> q) & 1, (a.z >> q) & 1, (b.x >> q) & 1, (b.z >> q) & 1);
  return {a.n_qubits, a.x ^ b.x, a.z ^ b.z, ((ph % 4) + 4) % 4};
}

bool commute(const PauliString& a, const PauliString& b) {
  return ((popcount(a.x & b.z) + popcount(a.z & b.x)) & 1) == 0;
}

bool qubitwise_commute(const PauliString& a, const PauliString& b) {
  const Det both = a.support() & b.support();
  return ((a.x ^ b.x) & both) == 0 && ((a.z ^ b.z) & both) == 0;
}

PauliSum::PauliSum(const PauliString& p, Complex c) : n_(p.n_qubits) { add(p, c); }

void PauliSum::add(const PauliString& p, Complex c) {
  if (p.n_qubits != n_) throw QsimError("Pauli string length differs from sum register");
  if (c == Complex(0.0)) return;
  auto& slot = terms_[{p.x, p.z}];
  slot += c * p.phase_factor();
  if (slot == Complex(0.0)) terms_.erase({p.x, p.z});
}

Complex PauliSum::coefficient(const PauliString& p) const {
  auto it = terms_.find({p.x, p.z});
  return it == terms_.end() ? Complex(0.0) : it->second * p.phase_factor();
}

PauliSum& PauliSum::operator+=(const PauliSum& o) {
  if (o.n_ != n_) {
    if (terms_.empty()) n_ = o.n_;
    else if (!o.terms_.empty()) throw QsimError("Pauli sums on different registers");
  }
  for (const auto& [k, c] : o.terms_) {
    auto& slot = terms_[k];
    slot += c;
    if (slot == Complex(0.0)) terms_.erase(k);
  }
  return *this;
}

PauliSum& PauliSum::operator-=(const PauliSum& o) { return *this += o * Complex(-1.0); }

PauliSum& PauliSum::operator*=(Complex c) {
  if (c == Complex(0.0)) {
    terms_.clear();
    return *this;
  }
  for (auto& kv : terms_) kv.second *= c;
  return *this;
}

PauliSum operator*(const PauliSum& a, const PauliSum& b) {
  if (a.n_ != b.n_) throw QsimError("Pauli sums on different registers");
  PauliSum out(a.n_);
  for (const auto& [ka, ca] : a.terms_)
    for (const auto& [kb, cb] : b.terms_) out.add(a.string_of(ka) * b.string_of(kb), ca * cb);
  return out;
}

PauliSum PauliSum::adjoint() const {
  PauliSum out(n_);
  for (const auto& [k, c] : terms_) out.terms_[k] = std::conj(c);
  return out;
}

void PauliSum::prune(double tol) {
  std::erase_if(terms_, [tol](const auto& kv) { return std::abs(kv.second) <= tol; });
}

bool PauliSum::is_hermitian(double tol) const {
  return std::all_of(terms_.begin(), terms_.end(), [tol](const auto& kv) {
    return std::abs(kv.second.imag()) <= tol * std::max(1.0, std::abs(kv.second));
  });
}

bool PauliSum::is_antihermitian(double tol) const {
  return std::all_of(terms_.begin(), terms_.end(), [tol](const auto& kv) {
    return std::abs(kv.second.real()) <= tol * std::max(1.0, std::abs(kv.second));
  });
}

double PauliSum::one_norm() const {
  double s = 0.0;
  for (const auto& kv : terms_) s += std::abs(kv.second);
  return s;
}

PauliSum jw_ladder(const Ladder& l, int n_qubits) {
  check_qubit(l.orbital, n_qubits);
  const Det bit = Det{1} << l.orbital;
  const Det zs = bit - 1;
  PauliSum out(n_qubits);
  out.add({n_qubits, bit, zs, 0}, 0.5);
  out.add({n_qubits, bit, zs | bit, 0}, Complex(0.0, l.dagger ? -0.5 : 0.5));
  return out;
}

PauliSum jw_map(const FermionOperator& op, int n_qubits) {
  if (op.max_orbital() >= n_qubits) throw QsimError("fermionic index exceeds register size");
  PauliSum out(n_qubits);
  out.add(PauliString::identity(n_qubits), op.constant);
  for (const auto& t : op.terms) {
    PauliSum prod(PauliString::identity(n_qubits), t.coeff);
    for (const auto& l : t.ops) prod = prod * jw_ladder(l, n_qubits);
    out += prod;
  }
  out.prune(1e-15);
  return out;
}

Statevector prepare_reference(int n_qubits, const std::vector<int>& occupied) {
  Statevector s(n_qubits);
  Det b = 0;
  for (int q : occupied) {
    check_qubit(q, n_qubits);
    if (b & (Det{1} << q)) throw QsimError("occupied list repeats a qubit");
    b |= Det{1} << q;
  }
  s.amp[static_cast<Eigen::Index>(b)] = 1.0;
  return s;
}

void apply_pauli(const PauliString& p, const Eigen::VectorXcd& v, Eigen::VectorXcd& y, Complex scale) {
  const int ny = popcount(p.x & p.z);
  const Complex base = scale * kIPow[(p.phase + ny) & 3];
  const Eigen::Index dim = v.size();
  for (Eigen::Index b = 0; b < dim; ++b) {
    const Complex a = v[b];
    if (a == Complex(0.0)) continue;
    const Det ub = static_cast<Det>(b);
    const Complex f = (popcount(ub & p.z) & 1) ? -base : base;
    y[static_cast<Eigen::Index>(ub ^ p.x)] += f * a;
  }
}

Eigen::VectorXcd apply_pauli_sum(const PauliSum& op, const Eigen::VectorXcd& v) {
  Eigen::VectorXcd y = Eigen::VectorXcd::Zero(v.size());
  for (const auto& [k, c] : op.terms()) apply_pauli(op.string_of(k), v, y, c);
  return y;
}

Statevector apply_exp_generator(const Statevector& state, const PauliSum& generator, double theta) {
  if (!generator.empty() && generator.n_qubits() != state.n_qubits)
    throw QsimError("generator register differs from state");
  if (!generator.is_antihermitian()) throw QsimError("generator is not anti-Hermitian");
  Statevector out = state;
  const double bound = std::abs(theta) * generator.one_norm();
  if (bound == 0.0) return out;
  const int steps = std::max(1, static_cast<int>(std::ceil(bound / 0.5)));
  const double h = theta / steps;
  for (int s = 0; s < steps; ++s) {
    Eigen::VectorXcd term = out.amp;
    Eigen::VectorXcd acc = out.amp;
    for (int k = 1; k < 64; ++k) {
      term = apply_pauli_sum(generator, term) * (h / k);
      acc += term;
      if (term.norm() <= 1e-17 * acc.norm()) break;
    }
    out.amp = std::move(acc);
  }
  return out;
}

Eigen::MatrixXcd dense_matrix(const PauliSum& op) {
  const Eigen::Index dim = Eigen::Index{1} << op.n_qubits();
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dim, dim);
  Eigen::VectorXcd e = Eigen::VectorXcd::Zero(dim);
  for (Eigen::Index j = 0; j < dim; ++j) {
    e.setZero();
    e[j] = 1.0;
    m.col(j) = apply_pauli_sum(op, e);
  }
  return m;
}

Complex pauli_expectation(const Statevector& state, const PauliString& p) {
  const int ny = popcount(p.x & p.z);
  const Complex base = kIPow[(p.phase + ny) & 3];
  Complex acc = 0.0;
  const Eigen::Index dim = state.dim();
  for (Eigen::Index b = 0; b < dim; ++b) {
    const Complex a = state.amp[b];
    if (a == Complex(0.0)) continue;
    const Det ub = static_cast<Det>(b);
    const Complex bra = std::conj(state.amp[static_cast<Eigen::Index>(ub ^ p.x)]);
    acc += (popcount(ub & p.z) & 1) ? -bra * a : bra * a;
  }
  return base * acc;
}

double expectation(const Statevector& state, const PauliSum& op) {
  if (!op.is_hermitian()) throw QsimError("expectation of a non-Hermitian operator");
  if (!op.empty() && op.n_qubits() != state.n_qubits) throw QsimError("operator register differs from state");
  double e = 0.0;
  for (const auto& [k, c] : op.terms()) e += (c * pauli_expectation(state, op.string_of(k))).real();
  return e;
}

Eigen::VectorXcd apply_fermion(const FermionOperator& op, const Eigen::VectorXcd& v) {
  Eigen::VectorXcd y = op.constant * v;
  const Eigen::Index dim = v.size();
  for (const auto& t : op.terms)
    for (Eigen::Index b = 0; b < dim; ++b) {
      if (v[b] == Complex(0.0)) continue;
      if (auto r = apply_ladders(t.ops, static_cast<Det>(b))) y[static_cast<Eigen::Index>(r->first)] += t.coeff * double(r->second) * v[b];
    }
  return y;
}

Eigen::SparseMatrix<double> fermion_matrix(const FermionOperator& op, const std::vector<Det>& basis,
                                           bool include_constant) {
  for (const auto& t : op.terms)
    if (std::abs(t.coeff.imag()) > 1e-14) throw QsimError("fermion_matrix needs real coefficients");
  const auto n = static_cast<Eigen::Index>(basis.size());
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(n) * 8);
  std::vector<std::pair<Eigen::Index, double>> col;
  for (Eigen::Index j = 0; j < n; ++j) {
    col.clear();
    if (include_constant && op.constant.real() != 0.0) col.emplace_back(j, op.constant.real());
    for (const auto& t : op.terms) {
      auto r = apply_ladders(t.ops, basis[j]);
      if (!r) continue;
      auto it = std::lower_bound(basis.begin(), basis.end(), r->first);
      if (it == basis.end() || *it != r->first) continue;
      col.emplace_back(it - basis.begin(), t.coeff.real() * r->second);
    }
    std::sort(col.begin(), col.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t k = 0; k < col.size();) {
      double s = 0.0;
      std::size_t m = k;
      for (; m < col.size() && col[m].first == col[k].first; ++m) s += col[m].second;
      if (s != 0.0) trip.emplace_back(col[k].first, j, s);
      k = m;
    }
  }
  Eigen::SparseMatrix<double> m(n, n);
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

std::vector<Det> full_basis(int n_qubits) {
  std::vector<Det> b(std::size_t{1} << n_qubits);
  for (std::size_t k = 0; k < b.size(); ++k) b[k] = k;
  return b;
}

std::vector<Det> number_sector(int n_qubits, int n_particles) {
  auto s = k_subsets(n_qubits, n_particles);
  std::sort(s.begin(), s.end());
  return s;
}

void apply_cnot(Statevector& s, int control, int target) {
  check_qubit(control, s.n_qubits);
  check_qubit(target, s.n_qubits);
  if (control == target) throw QsimError("CNOT control equals target");
  const Det c = Det{1} << control, t = Det{1} << target;
  for (Eigen::Index b = 0; b < s.dim(); ++b) {
    const Det ub = static_cast<Det>(b);
    if ((ub & c) && !(ub & t)) std::swap(s.amp[b], s.amp[static_cast<Eigen::Index>(ub | t)]);
  }
}

void apply_hadamard(Statevector& s, int q) {
  check_qubit(q, s.n_qubits);
  const Det bit = Det{1} << q;
  const double r = 1.0 / std::sqrt(2.0);
  for (Eigen::Index b = 0; b < s.dim(); ++b) {
    const Det ub = static_cast<Det>(b);
    if (ub & bit) continue;
    const auto b1 = static_cast<Eigen::Index>(ub | bit);
    const Complex a0 = s.amp[b], a1 = s.amp[b1];
    s.amp[b] = r * (a0 + a1);
    s.amp[b1] = r * (a0 - a1);
  }
}

void apply_sdg(Statevector& s, int q) {
  check_qubit(q, s.n_qubits);
  const Det bit = Det{1} << q;
  for (Eigen::Index b = 0; b < s.dim(); ++b)
    if (static_cast<Det>(b) & bit) s.amp[b] *= Complex(0.0, -1.0);
}

void NoiseModel::validate() const {
  for (double p : {depol_p, readout_p01, readout_p10})
    if (!(p >= 0.0 && p <= 1.0)) throw QsimError("noise probabilities must lie in [0,1]");
}

Statevector LayeredCircuit::run() const {
  Statevector s = initial;
  for (const auto& layer : layers) layer(s);
  return s;
}

std::string bitstring(Det b, int n_qubits) {
  std::string s(n_qubits, '0');
  for (int q = 0; q < n_qubits; ++q)
    if ((b >> q) & 1) s[q] = '1';
  return s;
}

void rotate_to_basis(Statevector& s, const std::string& basis) {
  if (static_cast<int>(basis.size()) != s.n_qubits) throw QsimError("basis length differs from register");
  for (int q = 0; q < s.n_qubits; ++q) {
    switch (basis[q]) {
      case 'Z': break;
      case 'X': apply_hadamard(s, q); break;
      case 'Y': apply_sdg(s, q); apply_hadamard(s, q); break;
      default: throw QsimError("measurement letters must be X, Y or Z");
    }
  }
}

namespace {

void draw(const Statevector& rotated, std::uint64_t shots, const NoiseModel& noise, std::mt19937_64& rng,
          Counts& out) {
  std::vector<double> prob(static_cast<std::size_t>(rotated.dim()));
  for (Eigen::Index b = 0; b < rotated.dim(); ++b) prob[b] = std::norm(rotated.amp[b]);
  std::discrete_distribution<std::size_t> dist(prob.begin(), prob.end());
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const bool flips = noise.readout_p01 > 0.0 || noise.readout_p10 > 0.0;
  for (std::uint64_t k = 0; k < shots; ++k) {
    Det b = dist(rng);
    if (flips) {
      for (int q = 0; q < rotated.n_qubits; ++q) {
        const Det bit = Det{1} << q;
        const double p = (b & bit) ? noise.readout_p10 : noise.readout_p01;
        if (p > 0.0 && u(rng) < p) b ^= bit;
      }
    }
    ++out[b];
  }
}

}  // namespace

Counts sample_counts(const LayeredCircuit& circuit, const std::string& basis, std::uint64_t shots,
                     const NoiseModel& noise, std::mt19937_64& rng) {
  noise.validate();
  const int n = circuit.initial.n_qubits;
  Counts out;
  if (shots == 0) return out;
  if (noise.depol_p == 0.0) {
    Statevector s = circuit.run();
    rotate_to_basis(s, basis);
    draw(s, shots, noise, rng, out);
    return out;
  }
  const std::size_t n_layers = circuit.layers.size();
  std::map<std::vector<std::uint8_t>, std::uint64_t> patterns;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> letter(1, 3);
  std::vector<std::uint8_t> pat(n_layers * n);
  for (std::uint64_t k = 0; k < shots; ++k) {
    for (auto& e : pat) e = (u(rng) < noise.depol_p) ? static_cast<std::uint8_t>(letter(rng)) : 0;
    ++patterns[pat];
  }
  static const char kLetters[4] = {'I', 'X', 'Y', 'Z'};
  for (const auto& [p, count] : patterns) {
    Statevector s = circuit.initial;
    for (std::size_t l = 0; l < n_layers; ++l) {
      circuit.layers[l](s);
      std::string err(n, 'I');
      for (int q = 0; q < n; ++q) err[q] = kLetters[p[l * n + q]];
      const PauliString e = PauliString::parse(err);
      if (!e.is_identity()) {
        Eigen::VectorXcd y = Eigen::VectorXcd::Zero(s.dim());
        apply_pauli(e, s.amp, y);
        s.amp = std::move(y);
      }
    }
    rotate_to_basis(s, basis);
    draw(s, count, noise, rng, out);
  }
  return out;
}

Counts sample_counts(const Statevector& state, const std::string& basis, std::uint64_t shots,
                     const NoiseModel& noise, std::mt19937_64& rng) {
  LayeredCircuit c;
  c.initial = state;
  c.layers.push_back([](Statevector&) {});
  return sample_counts(c, basis, shots, noise, rng);
}

}  // namespace ptvqe::qsim
