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

#include "ptvqe/oracle.hpp"

#include <algorithm>
#include <cmath>

namespace ptvqe::oracle {

using integrals::antisym;

DeterminantSpace::DeterminantSpace(std::vector<Det> dets) : dets_(std::move(dets)) {
  std::sort(dets_.begin(), dets_.end());
  dets_.erase(std::unique(dets_.begin(), dets_.end()), dets_.end());
}

DeterminantSpace DeterminantSpace::sector(int n_orbitals, int n_alpha, int n_beta) {
  if (n_alpha < 0 || n_beta < 0 || n_alpha > n_orbitals || n_beta > n_orbitals) return DeterminantSpace{};
  auto spread = [](Det m, int spin) {
    Det out = 0;
    for (int p = 0; m; ++p, m >>= 1)
      if (m & 1) out |= Det{1} << (2 * p + spin);
    return out;
  };
  std::vector<Det> out;
  const auto as = k_subsets(n_orbitals, n_alpha), bs = k_subsets(n_orbitals, n_beta);
  out.reserve(as.size() * bs.size());
  for (Det a : as)
    for (Det b : bs) out.push_back(spread(a, 0) | spread(b, 1));
  return DeterminantSpace(std::move(out));
}

long DeterminantSpace::index(Det d) const {
  auto it = std::lower_bound(dets_.begin(), dets_.end(), d);
  if (it == dets_.end() || *it != d) return -1;
  return static_cast<long>(it - dets_.begin());
}

Eigen::SparseMatrix<double> ci_hamiltonian(const integrals::IntegralSet& ints, const DeterminantSpace& space) {
  const auto& h = ints.h1;
  const auto& g = ints.h2;
  const int nso = 2 * ints.n_orbitals;
  const auto dim = static_cast<Eigen::Index>(space.size());
  std::vector<Eigen::Triplet<double>> trip;
  std::vector<int> occ, vir;
  for (Eigen::Index j = 0; j < dim; ++j) {
    const Det d = space[j];
    occ.clear();
    vir.clear();
    for (int p = 0; p < nso; ++p) ((d >> p) & 1 ? occ : vir).push_back(p);

    double diag = ints.core;
    for (std::size_t a = 0; a < occ.size(); ++a) {
      diag += h(occ[a] >> 1, occ[a] >> 1);
      for (std::size_t b = a + 1; b < occ.size(); ++b) diag += antisym(g, occ[a], occ[b], occ[a], occ[b]);
    }
    trip.emplace_back(j, j, diag);

    for (int p : occ)
      for (int a : vir) {
        if ((p & 1) != (a & 1)) continue;
        const Ladder ops[2] = {cre(a), ann(p)};
        auto r = apply_ladders(ops, 2, d);
        const long i = space.index(r->first);
        if (i < 0) continue;
        double v = h(a >> 1, p >> 1);
        for (int q : occ)
          if (q != p) v += antisym(g, a, q, p, q);
        if (v != 0.0) trip.emplace_back(i, j, v * r->second);
      }

    for (std::size_t x = 0; x < occ.size(); ++x)
      for (std::size_t y = x + 1; y < occ.size(); ++y) {
        const int p = occ[x], q = occ[y];
        for (std::size_t u = 0; u < vir.size(); ++u)
          for (std::size_t w = u + 1; w < vir.size(); ++w) {
            const int a = vir[u], b = vir[w];
            if ((p & 1) + (q & 1) != (a & 1) + (b & 1)) continue;
            const double v = antisym(g, a, b, p, q);
            if (v == 0.0) continue;
            const Ladder ops[4] = {cre(a), cre(b), ann(q), ann(p)};
            auto r = apply_ladders(ops, 4, d);
            const long i = space.index(r->first);
            if (i < 0) continue;
            trip.emplace_back(i, j, v * r->second);
          }
      }
  }
  Eigen::SparseMatrix<double> m(dim, dim);
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

namespace {

std::pair<double, Eigen::VectorXd> davidson(const Eigen::SparseMatrix<double>& a, const DavidsonOptions& opt) {
  const Eigen::Index n = a.rows();
  const Eigen::VectorXd diag = a.diagonal();
  Eigen::Index start = 0;
  diag.minCoeff(&start);

  Eigen::MatrixXd v(n, 0), av(n, 0);
  auto push = [&](Eigen::VectorXd t) {
    for (int pass = 0; pass < 2; ++pass) t -= v * (v.transpose() * t);
    const double nt = t.norm();
    if (nt < 1e-12) return false;
    t /= nt;
    v.conservativeResize(Eigen::NoChange, v.cols() + 1);
    av.conservativeResize(Eigen::NoChange, av.cols() + 1);
    v.col(v.cols() - 1) = t;
    av.col(av.cols() - 1) = a * t;
    return true;
  };

  Eigen::VectorXd guess = Eigen::VectorXd::Zero(n);
  guess[start] = 1.0;
  // a little spread so the start vector is not an exact eigenvector of the diagonal
  for (Eigen::Index k = 0; k < n; ++k) guess[k] += 1e-3 / (1.0 + std::abs(diag[k] - diag[start]));
  push(guess);

  double theta = 0.0;
  Eigen::VectorXd x;
  for (int it = 0; it < opt.max_iter; ++it) {
    Eigen::MatrixXd sub = v.transpose() * av;
    sub = 0.5 * (sub + sub.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sub);
    theta = es.eigenvalues()[0];
    Eigen::VectorXd y = es.eigenvectors().col(0);
    x = v * y;
    Eigen::VectorXd r = av * y - theta * x;
    if (r.norm() < opt.tol) return {theta, x};
    if (v.cols() >= opt.max_subspace) {
      Eigen::MatrixXd keep = v * es.eigenvectors().leftCols(4);
      Eigen::MatrixXd akeep = av * es.eigenvectors().leftCols(4);
      v = keep;
      av = akeep;
    }
    Eigen::VectorXd t(n);
    for (Eigen::Index k = 0; k < n; ++k) {
      double den = theta - diag[k];
      if (std::abs(den) < 1e-8) den = den < 0 ? -1e-8 : 1e-8;
      t[k] = r[k] / den;
    }
    if (!push(t) && !push(r)) break;
  }
  throw OracleError("Davidson did not converge");
}

}  // namespace

std::pair<double, Eigen::VectorXd> lowest_eigenpair(const Eigen::SparseMatrix<double>& h, const DavidsonOptions& opt,
                                                    Eigen::Index dense_limit) {
  if (h.rows() == 0) throw OracleError("empty sector");
  if (h.rows() <= dense_limit) {
    Eigen::MatrixXd d = Eigen::MatrixXd(h);
    d = 0.5 * (d + d.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(d);
    return {es.eigenvalues()[0], es.eigenvectors().col(0)};
  }
  return davidson(h, opt);
}

CiResult casci(const integrals::IntegralSet& ints, int n_electrons, int ms2, std::size_t max_dim) {
  if ((n_electrons + ms2) % 2 != 0) throw OracleError("electron count and 2*m_s have different parity");
  const int na = (n_electrons + ms2) / 2, nb = (n_electrons - ms2) / 2;
  const std::uint64_t dim = binomial(ints.n_orbitals, na) * binomial(ints.n_orbitals, nb);
  if (dim == 0) throw OracleError("empty sector");
  if (dim > max_dim) throw OracleError("sector dimension " + std::to_string(dim) + " exceeds limit");
  CiResult res;
  res.space = DeterminantSpace::sector(ints.n_orbitals, na, nb);
  const auto h = ci_hamiltonian(ints, res.space);
  auto [e, v] = lowest_eigenpair(h);
  res.energy = e;
  res.ground_vector = std::move(v);
  res.residual = (h * res.ground_vector - e * res.ground_vector).norm();
  return res;
}

CiResult casci(const integrals::ActiveHamiltonian& h, int n_electrons, int ms2, std::size_t max_dim) {
  auto ints = integrals::to_integral_set(h);
  ints.n_electrons = n_electrons;
  ints.ms2 = ms2;
  return casci(ints, n_electrons, ms2, max_dim);
}

double fci_sector_check(const qsim::PauliSum& h, int n_electrons) {
  const int n = h.n_qubits();
  if (n > 16) throw OracleError("fci_sector_check is limited to 16 qubits");
  if (n_electrons < 0 || n_electrons > n) throw OracleError("empty sector");
  const auto basis = qsim::number_sector(n, n_electrons);
  const auto dim = static_cast<Eigen::Index>(basis.size());
  std::vector<Eigen::Index> pos(std::size_t{1} << n, -1);
  for (Eigen::Index k = 0; k < dim; ++k) pos[basis[k]] = k;
  std::vector<Eigen::Triplet<double>> trip;
  for (const auto& [key, c] : h.terms()) {
    if (std::abs(c.imag()) > 1e-12) throw OracleError("qubit Hamiltonian is not real");
    const auto p = h.string_of(key);
    const int ny = popcount(p.x & p.z);
    if (ny % 2) {
      if (std::abs(c) > 1e-12) throw OracleError("qubit Hamiltonian has imaginary matrix elements");
      continue;
    }
    for (Eigen::Index j = 0; j < dim; ++j) {
      const Det b = basis[j];
      const Eigen::Index i = pos[b ^ p.x];
      if (i < 0) continue;
      double f = (ny / 2) % 2 ? -1.0 : 1.0;
      if (popcount(b & p.z) & 1) f = -f;
      trip.emplace_back(i, j, f * c.real());
    }
  }
  Eigen::SparseMatrix<double> m(dim, dim);
  m.setFromTriplets(trip.begin(), trip.end());
  return lowest_eigenpair(m).first;
}

}  // namespace ptvqe::oracle
