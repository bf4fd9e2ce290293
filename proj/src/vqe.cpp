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
#include "ptvqe/vqe.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace ptvqe::vqe {

std::string PoolOperator::label() const {
  if (kind == PoolKind::Pauli) {
    std::string s;
    for (const auto& [key, c] : generator.terms()) {
      if (!s.empty()) s += " + ";
      s += "(" + std::to_string(c.imag()) + "i)" + generator.string_of(key).letters();
    }
    return s;
  }
  return to_string(excitation.ops);
}

namespace {

PoolOperator fermionic(PoolKind kind, std::vector<int> idx, std::vector<Ladder> ops, int n) {
  PoolOperator op;
  op.kind = kind;
  op.indices = std::move(idx);
  op.excitation = {1.0, std::move(ops)};
  FermionOperator tau;
  tau.terms.push_back(op.excitation);
  auto dag = adjoint(op.excitation);
  dag.coeff = -dag.coeff;
  tau.terms.push_back(dag);
  op.generator = qsim::jw_map(tau, n);
  return op;
}

}  // namespace

std::vector<PoolOperator> build_pool(int n) {
  std::vector<PoolOperator> pool;
  for (int u = 0; u < n; ++u)
    for (int v = 0; v < u; ++v)
      if (u % 2 == v % 2) pool.push_back(fermionic(PoolKind::Single, {u, v}, {cre(u), ann(v)}, n));
  std::vector<std::pair<int, int>> pairs;
  for (int u = 0; u < n; ++u)
    for (int v = u + 1; v < n; ++v) pairs.emplace_back(u, v);
  for (const auto& [u, v] : pairs)
    for (const auto& [w, x] : pairs) {
      if (!(std::make_pair(w, x) < std::make_pair(u, v))) continue;
      if (u == w || u == x || v == w || v == x) continue;
      if (u % 2 + v % 2 != w % 2 + x % 2) continue;
      pool.push_back(fermionic(PoolKind::Double, {u, v, w, x}, {cre(u), cre(v), ann(w), ann(x)}, n));
    }
  return pool;
}

std::vector<PoolOperator> build_pool(const integrals::OrbitalPartition& part) {
  return build_pool(2 * static_cast<int>(part.active.size()));
}

PoolOperator f2_generator() {
  PoolOperator op;
  op.kind = PoolKind::Pauli;
  op.indices = {0, 1, 2, 3};
  op.generator = qsim::PauliSum(qsim::PauliString::parse("XXXY"), Complex(0.0, -0.5));
  return op;
}

Sector make_sector(const integrals::ActiveHamiltonian& h, int ms2) {
  Sector s;
  s.n_qubits = 2 * h.n_orbitals();
  s.n_electrons = h.n_electrons;
  s.ms2 = ms2;
  if ((h.n_electrons + ms2) % 2 != 0 || std::abs(ms2) > h.n_electrons) throw VqeError("invalid (N, 2m_s) sector");
  s.space = oracle::DeterminantSpace::sector(h.n_orbitals(), (h.n_electrons + ms2) / 2, (h.n_electrons - ms2) / 2);
  auto ints = integrals::to_integral_set(h);
  ints.core = 0.0;
  s.matrix = oracle::ci_hamiltonian(ints, s.space);
  s.e_core = h.e_core;
  return s;
}

Sector make_sector(const qsim::PauliSum& h, double e_core, int n_electrons, int ms2) {
  const int n = h.n_qubits();
  if (n % 2 != 0) throw VqeError("qubit count must be even");
  if ((n_electrons + ms2) % 2 != 0 || std::abs(ms2) > n_electrons) throw VqeError("invalid (N, 2m_s) sector");
  Sector s;
  s.n_qubits = n;
  s.n_electrons = n_electrons;
  s.ms2 = ms2;
  s.e_core = e_core;
  s.space = oracle::DeterminantSpace::sector(n / 2, (n_electrons + ms2) / 2, (n_electrons - ms2) / 2);
  const auto dim = static_cast<Eigen::Index>(s.space.size());
  std::map<std::pair<Eigen::Index, Eigen::Index>, Complex> elems;
  for (const auto& [key, c] : h.terms()) {
    const auto p = h.string_of(key);
    const int ny = popcount(p.x & p.z);
    const Complex ph = std::pow(Complex(0.0, 1.0), ny);
    for (Eigen::Index j = 0; j < dim; ++j) {
      const long i = s.space.index(s.space[j] ^ p.x);
      if (i < 0) continue;
      const double f = popcount(s.space[j] & p.z) & 1 ? -1.0 : 1.0;
      elems[{i, j}] += f * ph * c;
    }
  }
  std::vector<Eigen::Triplet<double>> trip;
  for (const auto& [ij, v] : elems) {
    if (std::abs(v.imag()) > 1e-12) throw VqeError("qubit Hamiltonian is not real in this sector");
    if (v.real() != 0.0) trip.emplace_back(ij.first, ij.second, v.real());
  }
  s.matrix.resize(dim, dim);
  s.matrix.setFromTriplets(trip.begin(), trip.end());
  return s;
}

SectorGenerator::SectorGenerator(const PoolOperator& op, const oracle::DeterminantSpace& space) {
  const auto dim = static_cast<Eigen::Index>(space.size());
  if (op.kind != PoolKind::Pauli) {
    for (Eigen::Index i = 0; i < dim; ++i) {
      auto r = apply_ladders(op.excitation.ops, space[i]);
      if (!r) continue;
      const long j = space.index(r->first);
      if (j < 0) throw VqeError("generator " + op.label() + " leaves the sector");
      pairs_.push_back({i, j, r->second * op.excitation.coeff.real()});
    }
    return;
  }
  std::map<std::pair<Eigen::Index, Eigen::Index>, Complex> elems;  // (row, col)
  for (const auto& [key, c] : op.generator.terms()) {
    const auto p = op.generator.string_of(key);
    const Complex ph = std::pow(Complex(0.0, 1.0), popcount(p.x & p.z));
    for (Eigen::Index j = 0; j < dim; ++j) {
      const long i = space.index(space[j] ^ p.x);
      if (i < 0) throw VqeError("generator " + op.label() + " leaves the sector");
      const double f = popcount(space[j] & p.z) & 1 ? -1.0 : 1.0;
      elems[{i, j}] += f * ph * c;
    }
  }
  std::vector<char> used(dim, 0);
  for (const auto& [ij, v] : elems) {
    const auto [i, j] = ij;
    if (std::abs(v) < 1e-14) continue;
    if (std::abs(v.imag()) > 1e-12 || i == j) throw VqeError("generator is not real antisymmetric in this sector");
    if (i < j) continue;
    auto it = elems.find({j, i});
    if (it == elems.end() || std::abs(it->second + v) > 1e-12)
      throw VqeError("generator is not real antisymmetric in this sector");
    if (used[i] || used[j]) throw VqeError("generator does not split into disjoint rotations");
    used[i] = used[j] = 1;
    pairs_.push_back({j, i, v.real()});
  }
}

void SectorGenerator::rotate(Eigen::VectorXd& v, double theta) const {
  for (const auto& p : pairs_) {
    const double phi = theta * p.s;
    const double c = std::cos(phi), s = std::sin(phi);
    const double a = v[p.i], b = v[p.j];
    v[p.i] = c * a - s * b;
    v[p.j] = s * a + c * b;
  }
}

double SectorGenerator::bracket(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
  double acc = 0.0;
  for (const auto& p : pairs_) acc += p.s * (a[p.j] * b[p.i] - a[p.i] * b[p.j]);
  return acc;
}

std::vector<int> reference_occupation(int n_electrons, int ms2) {
  const int na = (n_electrons + ms2) / 2, nb = (n_electrons - ms2) / 2;
  std::vector<int> occ;
  for (int k = 0; k < std::max(na, nb); ++k) {
    if (k < na) occ.push_back(2 * k);
    if (k < nb) occ.push_back(2 * k + 1);
  }
  return occ;
}

qsim::Statevector Ansatz::prepare() const {
  auto s = qsim::prepare_reference(n_qubits, occupied);
  for (std::size_t k = 0; k < ops.size(); ++k) s = qsim::apply_exp_generator(s, ops[k].generator, theta[k]);
  return s;
}

Ansatz fixed_ansatz_f2(double theta) {
  Ansatz a;
  a.n_qubits = 4;
  a.occupied = {0, 1};
  a.ops = {f2_generator()};
  a.theta = {theta};
  return a;
}

namespace {

const qsim::PauliSum& simplified_generator() {
  static const qsim::PauliSum g(qsim::PauliString::parse("XIYI"), Complex(0.0, -0.5));
  return g;
}

}  // namespace

qsim::Statevector prepare_f2(double theta, F2Convention conv) {
  if (conv == F2Convention::Paired) return fixed_ansatz_f2(theta).prepare();
  auto s = qsim::apply_exp_generator(qsim::prepare_reference(4, {0}), simplified_generator(), theta);
  qsim::apply_cnot(s, 0, 1);
  qsim::apply_cnot(s, 2, 3);
  return s;
}

qsim::LayeredCircuit f2_circuit(double theta, F2Convention conv) {
  qsim::LayeredCircuit c;
  if (conv == F2Convention::Paired) {
    c.initial = qsim::prepare_reference(4, {0, 1});
    c.layers.push_back([g = f2_generator().generator, theta](qsim::Statevector& s) {
      s = qsim::apply_exp_generator(s, g, theta);
    });
  } else {
    c.initial = qsim::prepare_reference(4, {0});
    c.layers.push_back([theta](qsim::Statevector& s) {
      s = qsim::apply_exp_generator(s, simplified_generator(), theta);
      qsim::apply_cnot(s, 0, 1);
      qsim::apply_cnot(s, 2, 3);
    });
  }
  return c;
}

namespace {

Det occupation_mask(const std::vector<int>& occ) {
  Det d = 0;
  for (int p : occ) d |= Det{1} << p;
  return d;
}

Eigen::Index reference_index(const Sector& sector, const Ansatz& a) {
  if (a.n_qubits != sector.n_qubits) throw VqeError("ansatz and Hamiltonian registers differ");
  const long k = sector.space.index(occupation_mask(a.occupied));
  if (k < 0) throw VqeError("reference determinant is outside the sector");
  return k;
}

struct Evaluator {
  const Sector& sector;
  Eigen::Index ref;
  std::vector<SectorGenerator> gens;

  Eigen::VectorXd state(const Eigen::VectorXd& theta) const {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(sector.dim());
    v[ref] = 1.0;
    for (std::size_t k = 0; k < gens.size(); ++k) gens[k].rotate(v, theta[k]);
    return v;
  }

  double operator()(const Eigen::VectorXd& theta, Eigen::VectorXd* grad) const {
    Eigen::VectorXd phi = state(theta);
    Eigen::VectorXd lam = sector.matrix * phi;
    const double e = phi.dot(lam) + sector.e_core;
    if (grad) {
      grad->resize(theta.size());
      for (auto k = static_cast<Eigen::Index>(gens.size()) - 1; k >= 0; --k) {
        (*grad)[k] = 2.0 * gens[k].bracket(lam, phi);
        gens[k].rotate(phi, -theta[k]);
        gens[k].rotate(lam, -theta[k]);
      }
    }
    return e;
  }
};

Eigen::VectorXd to_vector(const std::vector<double>& t) {
  return Eigen::Map<const Eigen::VectorXd>(t.data(), static_cast<Eigen::Index>(t.size()));
}

}  // namespace

Eigen::VectorXd sector_state(const Sector& sector, const Ansatz& ansatz) {
  Evaluator ev{sector, reference_index(sector, ansatz), {}};
  for (const auto& op : ansatz.ops) ev.gens.emplace_back(op, sector.space);
  return ev.state(to_vector(ansatz.theta));
}

qsim::Statevector embed(const Sector& sector, const Eigen::VectorXd& v) {
  qsim::Statevector s(sector.n_qubits);
  for (Eigen::Index k = 0; k < sector.dim(); ++k) s.amp[static_cast<Eigen::Index>(sector.space[k])] = v[k];
  return s;
}

std::vector<double> pool_gradients(const Sector& sector, const Eigen::VectorXd& state,
                                   const std::vector<SectorGenerator>& pool) {
  const Eigen::VectorXd lam = sector.matrix * state;
  std::vector<double> g(pool.size());
  for (std::size_t k = 0; k < pool.size(); ++k) g[k] = 2.0 * pool[k].bracket(lam, state);
  return g;
}

std::vector<double> pool_gradients(const Sector& sector, const Eigen::VectorXd& state,
                                   const std::vector<PoolOperator>& pool) {
  std::vector<SectorGenerator> gens;
  gens.reserve(pool.size());
  for (const auto& op : pool) gens.emplace_back(op, sector.space);
  return pool_gradients(sector, state, gens);
}

double ansatz_energy(const Sector& sector, const Ansatz& ansatz, Eigen::VectorXd* grad) {
  Evaluator ev{sector, reference_index(sector, ansatz), {}};
  for (const auto& op : ansatz.ops) ev.gens.emplace_back(op, sector.space);
  return ev(to_vector(ansatz.theta), grad);
}

namespace {

void finish(const Sector& sector, const Evaluator& ev, VqeResult& res) {
  const Eigen::VectorXd th = to_vector(res.ansatz.theta);
  res.sector_state = ev.state(th);
  res.state = embed(sector, res.sector_state);
  res.energy = ev(th, nullptr);
}

}  // namespace

VqeResult optimize_ansatz(const Sector& sector, Ansatz ansatz, const BfgsOptions& opt) {
  Evaluator ev{sector, reference_index(sector, ansatz), {}};
  for (const auto& op : ansatz.ops) ev.gens.emplace_back(op, sector.space);
  auto fit = bfgs_minimize([&](const Eigen::VectorXd& x, Eigen::VectorXd& g) { return ev(x, &g); },
                           to_vector(ansatz.theta), opt);
  VqeResult res;
  ansatz.theta.assign(fit.x.data(), fit.x.data() + fit.x.size());
  res.ansatz = std::move(ansatz);
  res.final_gradient_norm = fit.g.size() ? fit.g.lpNorm<Eigen::Infinity>() : 0.0;
  res.optimizer_converged = fit.converged;
  res.gradient_converged = fit.converged;
  finish(sector, ev, res);
  res.energies = {res.energy};
  return res;
}

VqeResult adapt_vqe(const Sector& sector, const std::vector<PoolOperator>& pool, const AdaptOptions& opt) {
  if (pool.empty()) throw VqeError("empty operator pool");
  std::vector<SectorGenerator> pgens;
  pgens.reserve(pool.size());
  for (const auto& op : pool) pgens.emplace_back(op, sector.space);

  VqeResult res;
  res.ansatz.n_qubits = sector.n_qubits;
  res.ansatz.occupied = reference_occupation(sector.n_electrons, sector.ms2);
  Evaluator ev{sector, reference_index(sector, res.ansatz), {}};
  Eigen::VectorXd theta(0);
  double energy = ev(theta, nullptr);
  res.energies.push_back(energy);

  for (int iter = 0;; ++iter) {
    const auto g = pool_gradients(sector, ev.state(theta), pgens);
    double gmax = 0.0;
    for (double x : g) gmax = std::max(gmax, std::abs(x));
    res.final_gradient_norm = gmax;
    if (gmax < opt.eps_grad) {
      res.gradient_converged = true;
      break;
    }
    if (static_cast<int>(res.ansatz.size()) >= opt.max_ops) break;
    std::size_t pick = 0;
    while (std::abs(g[pick]) < gmax * (1.0 - opt.tie_tol)) ++pick;

    res.ansatz.ops.push_back(pool[pick]);
    res.ansatz.pool_index.push_back(pick);
    ev.gens.push_back(pgens[pick]);
    theta.conservativeResize(theta.size() + 1);
    theta[theta.size() - 1] = 0.0;
    auto fit = bfgs_minimize([&](const Eigen::VectorXd& x, Eigen::VectorXd& gr) { return ev(x, &gr); }, theta,
                             opt.bfgs);
    if (!fit.converged) res.optimizer_converged = false;
    if (fit.f <= energy + 1e-10) {
      theta = fit.x;
      energy = fit.f;
    }
    res.energies.push_back(energy);
    AdaptRecord rec{iter, pick, pool[pick].label(), energy, gmax};
    res.trace.push_back(rec);
    if (opt.on_iteration) opt.on_iteration(rec);
  }
  res.ansatz.theta.assign(theta.data(), theta.data() + theta.size());
  finish(sector, ev, res);
  return res;
}

}  // namespace ptvqe::vqe
