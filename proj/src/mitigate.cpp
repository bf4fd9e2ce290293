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

#include "ptvqe/mitigate.hpp"

#include <bit>
#include <cmath>
#include <map>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

namespace ptvqe::mitigate {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

double min_eig(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
}

Eigen::MatrixXd clip(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
  const Eigen::VectorXd w = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * w.asDiagonal() * es.eigenvectors().transpose();
}

int pair_sign(int a, int b) { return a < b ? 1 : -1; }

Det pair_mask(int a, int b) { return (Det{1} << a) | (Det{1} << b); }

// Affine maps D -> Q and D -> G over column-major vectorized blocks, with the
// contraction D -> 1D.
struct Maps {
  int r = 0;
  int n = 0;
  Eigen::Index P = 0;
  SpMat C;   // r^2 x P^2
  SpMat Aq;  // P^2 x P^2
  SpMat Ag;  // r^4 x P^2
  Eigen::VectorXd cq;
  Eigen::VectorXd trace;  // tr D = trace . d
  double tau = 0.0;  // sum of the stored diagonal
  Eigen::SimplicialLDLT<SpMat> solver;
  Eigen::VectorXd y;  // M^-1 trace

  Maps(int rank, int n_particles) : r(rank), n(n_particles) {
    P = static_cast<Eigen::Index>(binomial(r, 2));
    auto d_index = [&](Det a, Det b) { return rdm::subset_rank(a) + P * rdm::subset_rank(b); };
    const double f = 2.0 / (n - 1);
    std::vector<Triplet> t;
    for (int p = 0; p < r; ++p)
      for (int q = 0; q < r; ++q)
        for (int s = 0; s < r; ++s) {
          if (s == p || s == q) continue;
          t.emplace_back(p + r * q, d_index(pair_mask(p, s), pair_mask(q, s)), f * pair_sign(p, s) * pair_sign(q, s));
        }
    C.resize(r * r, P * P);
    C.setFromTriplets(t.begin(), t.end());
    const Eigen::SparseMatrix<double, Eigen::RowMajor> Crow = C;
    auto add_d1 = [&](std::vector<Triplet>& out, Eigen::Index row, int p, int q, double w) {
      for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(Crow, p + r * q); it; ++it)
        out.emplace_back(row, it.col(), w * it.value());
    };

    t.clear();
    cq = Eigen::VectorXd::Zero(P * P);
    for (int p = 0; p < r; ++p)
      for (int q = p + 1; q < r; ++q)
        for (int a = 0; a < r; ++a)
          for (int b = a + 1; b < r; ++b) {
            const Eigen::Index i = rdm::subset_rank(pair_mask(p, q)), j = rdm::subset_rank(pair_mask(a, b));
            const Eigen::Index row = i + P * j;
            if (i == j) cq(row) = 0.5;
            t.emplace_back(row, j + P * i, 1.0);
            if (q == b) add_d1(t, row, a, p, -0.5);
            if (q == a) add_d1(t, row, b, p, 0.5);
            if (p == b) add_d1(t, row, a, q, 0.5);
            if (p == a) add_d1(t, row, b, q, -0.5);
          }
    Aq.resize(P * P, P * P);
    Aq.setFromTriplets(t.begin(), t.end());

    t.clear();
    const Eigen::Index R2 = r * r;
    for (int p = 0; p < r; ++p)
      for (int q = 0; q < r; ++q)
        for (int a = 0; a < r; ++a)
          for (int s = 0; s < r; ++s) {
            const Eigen::Index row = (p * r + q) + R2 * (a * r + s);
            if (q == s) add_d1(t, row, p, a, 1.0);
            if (p != s && q != a)
              t.emplace_back(row, d_index(pair_mask(p, s), pair_mask(q, a)), 2.0 * pair_sign(p, s) * pair_sign(q, a));
          }
    Ag.resize(R2 * R2, P * P);
    Ag.setFromTriplets(t.begin(), t.end());

    trace = Eigen::VectorXd::Zero(P * P);
    for (Eigen::Index i = 0; i < P; ++i) trace(i + P * i) = 1.0;
    tau = 0.25 * n * (n - 1);  // stored pairs; the ordered sum is twice this

    SpMat M(P * P, P * P);
    M.setIdentity();
    M += SpMat(Aq.transpose() * Aq) + SpMat(Ag.transpose() * Ag);
    solver.compute(M);
    if (solver.info() != Eigen::Success) throw MitigationError("normal matrix factorization failed");
    y = solver.solve(trace);
  }
};

struct Lifted {
  Eigen::VectorXd d, q, g;

  Lifted operator+(const Lifted& o) const { return {d + o.d, q + o.q, g + o.g}; }
  Lifted operator-(const Lifted& o) const { return {d - o.d, q - o.q, g - o.g}; }
  Lifted operator*(double c) const { return {c * d, c * q, c * g}; }
  double norm() const { return std::sqrt(d.squaredNorm() + q.squaredNorm() + g.squaredNorm()); }
  static Lifted zero_like(const Lifted& o) {
    return {Eigen::VectorXd::Zero(o.d.size()), Eigen::VectorXd::Zero(o.q.size()), Eigen::VectorXd::Zero(o.g.size())};
  }
};

Eigen::VectorXd symmetrized(const Eigen::VectorXd& v, Eigen::Index n) {
  Eigen::Map<const Eigen::MatrixXd> m(v.data(), n, n);
  Eigen::MatrixXd s = 0.5 * (m + m.transpose());
  return Eigen::Map<Eigen::VectorXd>(s.data(), s.size());
}

Lifted lift(const Maps& mp, const Eigen::VectorXd& d) { return {d, mp.Aq * d + mp.cq, mp.Ag * d}; }

Lifted project_affine(const Maps& mp, const Lifted& z) {
  const Eigen::VectorXd b = z.d + mp.Aq.transpose() * (z.q - mp.cq) + mp.Ag.transpose() * z.g;
  Eigen::VectorXd x = mp.solver.solve(b);
  x -= mp.y * ((mp.trace.dot(x) - mp.tau) / mp.trace.dot(mp.y));
  return lift(mp, symmetrized(x, mp.P));
}

Eigen::VectorXd clip_block(const Eigen::VectorXd& v, Eigen::Index n) {
  Eigen::Map<const Eigen::MatrixXd> m(v.data(), n, n);
  Eigen::MatrixXd c = clip(m);
  return Eigen::Map<Eigen::VectorXd>(c.data(), c.size());
}

Lifted project_cone(const Maps& mp, const Lifted& z) {
  return {clip_block(z.d, mp.P), clip_block(z.q, mp.P), clip_block(z.g, mp.r * mp.r)};
}

double lifted_min_eig(const Maps& mp, const Lifted& z) {
  auto block = [](const Eigen::VectorXd& v, Eigen::Index n) {
    return min_eig(Eigen::Map<const Eigen::MatrixXd>(v.data(), n, n));
  };
  return std::min({block(z.d, mp.P), block(z.q, mp.P), block(z.g, mp.r * mp.r)});
}

struct Projection {
  Lifted z;
  int sweeps = 0;
  bool converged = false;
  double displacement = 0.0;
};

Projection dykstra(const Maps& mp, const Lifted& start, double tol, int max_sweeps) {
  Projection out;
  Lifted x = start, p = Lifted::zero_like(start), q = Lifted::zero_like(start);
  Lifted y = x;
  for (out.sweeps = 1; out.sweeps <= max_sweeps; ++out.sweeps) {
    y = project_affine(mp, x + p);
    p = x + p - y;
    Lifted xn = project_cone(mp, y + q);
    q = y + q - xn;
    out.displacement = (xn - x).norm();
    x = std::move(xn);
    if (out.displacement < tol) {
      out.converged = true;
      break;
    }
  }
  out.sweeps = std::min(out.sweeps, max_sweeps);
  out.z = y;
  return out;
}

rdm::RealRdm to_rdm(const Eigen::VectorXd& d, int r) {
  rdm::RealRdm out(2, r);
  out.matrix() = Eigen::Map<const Eigen::MatrixXd>(d.data(), out.dim(), out.dim());
  return out;
}

}  // namespace

SymmetrySpec SymmetrySpec::parity(int n_qubits, int sector) {
  SymmetrySpec s;
  s.op = {n_qubits, 0, (Det{1} << n_qubits) - 1, 0};
  s.sector = sector;
  return s;
}

void SymmetrySpec::validate() const {
  if (sector != 1 && sector != -1) throw MitigationError("symmetry sector must be +1 or -1");
  if (op.phase % 2 != 0) throw MitigationError("symmetry operator must square to the identity");
  if (op.is_identity()) throw MitigationError("identity is not a useful symmetry");
}

void SymmetrySpec::check_commutes(const qsim::PauliSum& h, double tol) const {
  validate();
  const qsim::PauliSum s(op);
  auto c = s * h - h * s;
  c.prune(tol * 1e-3);
  if (c.one_norm() > tol) throw MitigationError("symmetry does not commute with the Hamiltonian");
}

double sv_expectation(double p, double ps, double s_exp, int s) {
  const double den = 1.0 + s * s_exp;
  if (std::abs(den) <= 1e-9) throw MitigationError("symmetry sector has vanishing weight");
  return (p + s * ps) / den;
}

PostSelection sv_postselect(const qsim::Counts& counts, const SymmetrySpec& spec, const std::string& basis) {
  spec.validate();
  if (spec.op.x != 0) throw MitigationError("post-selection needs a Z-type symmetry");
  for (int q = 0; q < spec.op.n_qubits; ++q)
    if (((spec.op.z >> q) & 1) && (q >= static_cast<int>(basis.size()) || basis[q] != 'Z'))
      throw MitigationError("symmetry is not diagonal in the measured basis");
  const int base = spec.op.phase == 2 ? -1 : 1;
  PostSelection out;
  std::uint64_t total = 0, kept = 0;
  for (const auto& [b, c] : counts) {
    total += c;
    const int eig = (popcount(b & spec.op.z) & 1) ? -base : base;
    if (eig == spec.sector) {
      out.counts[b] += c;
      kept += c;
    }
  }
  if (kept == 0) throw MitigationError("post-selection retained no shots");
  out.retained_fraction = static_cast<double>(kept) / static_cast<double>(total);
  return out;
}

SvPlan sv_measurement_plan(const std::vector<qsim::PauliString>& strings, const SymmetrySpec& spec,
                           std::uint64_t shots_per_group) {
  spec.validate();
  SvPlan out;
  out.spec = spec;
  out.n_strings = strings.size();
  std::vector<qsim::PauliString> all = strings;
  std::map<std::pair<Det, Det>, std::size_t> index;
  for (std::size_t k = 0; k < strings.size(); ++k) {
    if (strings[k].phase != 0) throw MitigationError("measured strings must be phase-free");
    index.emplace(std::make_pair(strings[k].x, strings[k].z), k);
  }
  auto intern = [&](qsim::PauliString p) {
    p.phase = 0;
    auto [it, fresh] = index.emplace(std::make_pair(p.x, p.z), all.size());
    if (fresh) all.push_back(p);
    return it->second;
  };
  for (const auto& p : strings) {
    if (!qsim::commute(p, spec.op)) throw MitigationError("measured string anticommutes with the symmetry");
    const auto ps = p * spec.op;
    const Complex f = ps.phase_factor();
    out.ps_sign.push_back(f.real());
    out.ps_index.push_back(intern(ps));
  }
  out.s_index = intern(spec.op);
  // diagonal strings share one Z group so that they can be post-selected
  std::vector<qsim::PauliString> rest;
  std::vector<std::size_t> rest_index;
  rdm::MeasurementPlan::Group zgroup{std::string(static_cast<std::size_t>(spec.op.n_qubits), 'Z'), {}};
  for (std::size_t k = 0; k < all.size(); ++k) {
    if (all[k].x == 0) {
      zgroup.members.push_back(k);
    } else {
      rest.push_back(all[k]);
      rest_index.push_back(k);
    }
  }
  rdm::MeasurementPlan sub;
  if (!rest.empty()) sub = rdm::group_qwc(rest, shots_per_group);
  out.plan.strings = all;
  out.plan.shots_per_group = shots_per_group;
  out.plan.groups.push_back(std::move(zgroup));
  for (auto& g : sub.groups) {
    for (auto& m : g.members) m = rest_index[m];
    out.plan.groups.push_back(std::move(g));
  }
  return out;
}

SvEstimate sv_string_expectations(const SvPlan& plan, const std::vector<qsim::Counts>& counts) {
  const auto all = rdm::string_expectations(plan.plan, counts);
  SvEstimate out;
  out.raw.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(plan.n_strings));
  out.verified.assign(plan.n_strings, 0.0);
  const double s_exp = all[plan.s_index] * (plan.spec.op.phase == 2 ? -1.0 : 1.0);
  std::uint64_t total = 0, kept = 0;
  for (std::size_t g = 0; g < plan.plan.groups.size(); ++g) {
    const auto& grp = plan.plan.groups[g];
    bool diagonal = plan.spec.op.x == 0;
    for (int q = 0; q < plan.spec.op.n_qubits && diagonal; ++q)
      if (((plan.spec.op.z >> q) & 1) && grp.basis[q] != 'Z') diagonal = false;
    bool any = false;
    for (auto m : grp.members) any = any || m < plan.n_strings;
    if (!any) continue;
    if (diagonal) {
      const auto sel = sv_postselect(counts[g], plan.spec, grp.basis);
      for (const auto& [b, c] : counts[g]) total += c;
      for (const auto& [b, c] : sel.counts) kept += c;
      for (auto m : grp.members)
        if (m < plan.n_strings) out.verified[m] = rdm::parity_expectation(sel.counts, plan.plan.strings[m]);
      ++out.postselected_groups;
    } else {
      for (auto m : grp.members)
        if (m < plan.n_strings)
          out.verified[m] =
              sv_expectation(all[m], plan.ps_sign[m] * all[plan.ps_index[m]], s_exp, plan.spec.sector);
      ++out.ratio_groups;
    }
  }
  if (total > 0) out.retained_fraction = static_cast<double>(kept) / static_cast<double>(total);
  return out;
}

PositivityBundle::MinEigenvalues PositivityBundle::min_eigenvalues() const {
  return {min_eig(d2), min_eig(q2), min_eig(g2), min_eig(d1), min_eig(q1)};
}

PositivityBundle build_bundle(const rdm::RealRdm& d2, int n_particles) {
  if (d2.order() != 2) throw MitigationError("bundle needs a 2-RDM");
  const int r = d2.n();
  if (n_particles < 2 || n_particles > r) throw MitigationError("particle number out of range");
  PositivityBundle b;
  b.n_particles = n_particles;
  b.rank = r;
  b.d2 = 0.5 * (d2.matrix() + d2.matrix().transpose());
  rdm::RealRdm sym(2, r);
  sym.matrix() = b.d2;
  b.d1 = rdm::contract(sym, n_particles).matrix();
  b.q1 = Eigen::MatrixXd::Identity(r, r) - b.d1.transpose();
  const auto& sub = sym.subsets();
  const Eigen::Index P = sym.dim();
  b.q2.resize(P, P);
  for (Eigen::Index i = 0; i < P; ++i) {
    const int p = std::countr_zero(sub[i]), q = 63 - std::countl_zero(sub[i]);
    for (Eigen::Index j = 0; j < P; ++j) {
      const int a = std::countr_zero(sub[j]), s = 63 - std::countl_zero(sub[j]);
      double v = (i == j ? 0.5 : 0.0) + b.d2(j, i);
      if (q == s) v -= 0.5 * b.d1(a, p);
      if (q == a) v += 0.5 * b.d1(s, p);
      if (p == s) v += 0.5 * b.d1(a, q);
      if (p == a) v -= 0.5 * b.d1(s, q);
      b.q2(i, j) = v;
    }
  }
  b.g2.resize(r * r, r * r);
  for (int p = 0; p < r; ++p)
    for (int q = 0; q < r; ++q)
      for (int a = 0; a < r; ++a)
        for (int s = 0; s < r; ++s) {
          double v = q == s ? b.d1(p, a) : 0.0;
          if (p != s && q != a) v += 2.0 * sym({p, s}, {q, a});
          b.g2(p * r + q, a * r + s) = v;
        }
  return b;
}

Eigen::MatrixXd contract_q2(const Eigen::MatrixXd& q2, int rank, int n_particles) {
  const int holes = rank - n_particles;
  if (holes < 2) throw MitigationError("hole contraction needs at least two holes");
  rdm::RealRdm q(2, rank);
  q.matrix() = q2;
  return rdm::contract(q, holes).matrix();
}

Reconstruction reconstruct_rdm(const rdm::RealRdm& d2_measured, int n_particles, const ReconstructOptions& opt,
                               const integrals::ActiveHamiltonian* h) {
  const int r = d2_measured.n();
  if (d2_measured.order() != 2) throw MitigationError("reconstruction needs a 2-RDM");
  if (n_particles < 2 || n_particles > r - 2)
    throw MitigationError("reconstruction needs at least two particles and two holes");
  const Maps mp(r, n_particles);
  Reconstruction out;
  out.report.before = build_bundle(d2_measured, n_particles).min_eigenvalues();

  Eigen::MatrixXd dm = 0.5 * (d2_measured.matrix() + d2_measured.matrix().transpose());
  const Eigen::VectorXd dvec = Eigen::Map<const Eigen::VectorXd>(dm.data(), dm.size());
  auto proj = dykstra(mp, lift(mp, dvec), opt.tol, opt.max_sweeps);
  out.report.iterations = proj.sweeps;
  out.report.converged = proj.converged;
  out.report.displacement = proj.displacement;
  Lifted best = proj.z;

  if (opt.mode == ReconstructMode::energy_min) {
    if (!h) throw MitigationError("energy minimization needs the active Hamiltonian");
    const Eigen::Index n = mp.P * mp.P;
    rdm::RealRdm zero(2, r);
    const double e0 = rdm::rdm_energy(*h, rdm::contract(zero, n_particles), zero);
    Eigen::VectorXd grad(n);
    for (Eigen::Index k = 0; k < n; ++k) {
      rdm::RealRdm unit(2, r);
      unit.matrix()(k % mp.P, k / mp.P) = 1.0;
      grad(k) = rdm::rdm_energy(*h, rdm::contract(unit, n_particles), unit) - e0;
    }
    auto energy = [&](const Lifted& z) { return e0 + grad.dot(z.d); };
    const double g_norm = grad.norm();
    double best_e = energy(best);
    Lifted cur = best;
    for (int k = 0; k < opt.energy_iterations && g_norm > 0.0; ++k) {
      const double eta = 0.1 / (g_norm * std::sqrt(k + 1.0));
      auto step = dykstra(mp, lift(mp, cur.d - eta * grad), opt.tol, opt.max_sweeps);
      out.report.iterations += step.sweeps;
      out.report.converged = out.report.converged && step.converged;
      cur = step.z;
      const double e = energy(cur);
      if (e < best_e) {
        best_e = e;
        best = cur;
      }
    }
  }

  if (lifted_min_eig(mp, best) < -0.1 * opt.psd_tol) {
    Eigen::MatrixXd mix = Eigen::MatrixXd::Identity(mp.P, mp.P) * (mp.tau / static_cast<double>(mp.P));
    const Lifted z_mix = lift(mp, Eigen::Map<const Eigen::VectorXd>(mix.data(), mix.size()));
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (lifted_min_eig(mp, best * (1.0 - mid) + z_mix * mid) >= -0.1 * opt.psd_tol)
        hi = mid;
      else
        lo = mid;
    }
    best = best * (1.0 - hi) + z_mix * hi;
    out.report.mixing = hi;
  }

  out.d2 = to_rdm(best.d, r);
  const auto bundle = build_bundle(out.d2, n_particles);
  out.d1 = rdm::RealRdm(1, r);
  out.d1.matrix() = bundle.d1;
  out.report.after = bundle.min_eigenvalues();
  out.report.trace_residual = std::abs(bundle.d2.trace() - mp.tau);
  Eigen::Map<const Eigen::VectorXd> qv(bundle.q2.data(), bundle.q2.size()), gv(bundle.g2.data(), bundle.g2.size());
  out.report.relation_residual = std::max((qv - best.q).cwiseAbs().maxCoeff(), (gv - best.g).cwiseAbs().maxCoeff());
  out.report.contraction_residual = (contract_q2(bundle.q2, r, n_particles) - bundle.q1).cwiseAbs().maxCoeff();
  return out;
}

nlohmann::json to_json(const ReconstructReport& r) {
  auto eig = [](const PositivityBundle::MinEigenvalues& m) {
    return nlohmann::ordered_json{{"d2", m.d2}, {"q2", m.q2}, {"g2", m.g2}, {"d1", m.d1}, {"q1", m.q1}};
  };
  nlohmann::ordered_json j;
  j["min_eigenvalues_before"] = eig(r.before);
  j["min_eigenvalues_after"] = eig(r.after);
  j["trace_residual"] = r.trace_residual;
  j["relation_residual"] = r.relation_residual;
  j["contraction_residual"] = r.contraction_residual;
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  j["mixing"] = r.mixing;
  return j;
}

nlohmann::json to_json(const MitigationReport& r) {
  nlohmann::ordered_json j;
  j["retained_fraction"] = r.retained_fraction;
  if (r.reconstruction) j["reconstruction"] = to_json(*r.reconstruction);
  return j;
}

}  // namespace ptvqe::mitigate
