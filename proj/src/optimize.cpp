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
#include "ptvqe/optimize.hpp"

#include <algorithm>
#include <cmath>

namespace ptvqe {

namespace {

struct Probe {
  double a = 0.0;
  double f = 0.0;
  double d = 0.0;  // directional derivative
  Eigen::VectorXd x, g;
};

}  // namespace

BfgsResult bfgs_minimize(const Objective& fn, Eigen::VectorXd x0, const BfgsOptions& opt) {
  const Eigen::Index n = x0.size();
  BfgsResult res;
  res.x = std::move(x0);
  res.g.resize(n);
  res.f = fn(res.x, res.g);
  res.evaluations = 1;
  if (n == 0 || res.g.lpNorm<Eigen::Infinity>() < opt.gtol) {
    res.converged = true;
    return res;
  }
  Eigen::MatrixXd hinv = Eigen::MatrixXd::Identity(n, n);
  const double c1 = 1e-4, c2 = 0.9;
  int restarts = 0;

  auto probe = [&](const Eigen::VectorXd& p, double a) {
    Probe s;
    s.a = a;
    s.x = res.x + a * p;
    s.g.resize(n);
    s.f = fn(s.x, s.g);
    s.d = s.g.dot(p);
    ++res.evaluations;
    return s;
  };

  for (res.iterations = 0; res.iterations < opt.max_iter; ++res.iterations) {
    Eigen::VectorXd p = -hinv * res.g;
    double d0 = res.g.dot(p);
    if (d0 >= 0.0) {
      hinv.setIdentity();
      p = -res.g;
      d0 = res.g.dot(p);
    }
    const double slack = 1e-13 * (1.0 + std::abs(res.f));
    auto armijo = [&](const Probe& s) { return s.f <= res.f + c1 * s.a * d0 + slack; };
    auto curvature = [&](const Probe& s) { return std::abs(s.d) <= -c2 * d0; };

    // bracketing phase followed by bisection-style zoom
    Probe lo{0.0, res.f, d0, res.x, res.g};
    Probe found;
    bool ok = false;
    double a = 1.0;
    if (res.iterations == 0 && restarts == 0) a = std::min(1.0, 0.1 / std::max(1e-12, res.g.lpNorm<Eigen::Infinity>()));
    for (int k = 0; k < 40 && !ok; ++k) {
      Probe s = probe(p, a);
      if (!armijo(s) || (k > 0 && s.f >= lo.f)) {
        Probe hi = s;
        for (int z = 0; z < 60; ++z) {
          double t;
          const double den = 2.0 * (hi.f - lo.f - lo.d * (hi.a - lo.a));
          if (den > 0.0) {
            t = lo.a - lo.d * (hi.a - lo.a) * (hi.a - lo.a) / den;
          } else {
            t = 0.5 * (lo.a + hi.a);
          }
          const double w = hi.a - lo.a;
          if (!(t > std::min(lo.a, hi.a) + 0.1 * std::abs(w) && t < std::max(lo.a, hi.a) - 0.1 * std::abs(w)))
            t = 0.5 * (lo.a + hi.a);
          Probe m = probe(p, t);
          if (!armijo(m) || m.f >= lo.f + slack) {
            hi = m;
          } else {
            if (curvature(m)) {
              found = m;
              ok = true;
              break;
            }
            if (m.d * (hi.a - lo.a) >= 0.0) hi = lo;
            lo = m;
          }
          if (std::abs(hi.a - lo.a) < 1e-16 * std::max(1.0, std::abs(lo.a))) break;
        }
        if (!ok && lo.a > 0.0) {
          found = lo;
          ok = true;
        }
        break;
      }
      if (curvature(s)) {
        found = s;
        ok = true;
        break;
      }
      if (s.d >= 0.0) {
        // overshoot past the minimum along p: zoom between s and lo
        Probe hi = lo;
        lo = s;
        for (int z = 0; z < 60; ++z) {
          const double t = 0.5 * (lo.a + hi.a);
          Probe m = probe(p, t);
          if (!armijo(m) || m.f >= lo.f + slack) {
            hi = m;
          } else {
            if (curvature(m)) {
              found = m;
              ok = true;
              break;
            }
            if (m.d * (hi.a - lo.a) >= 0.0) hi = lo;
            lo = m;
          }
        }
        if (!ok) {
          found = lo;
          ok = true;
        }
        break;
      }
      lo = s;
      a *= 2.0;
    }
    if (!ok) {
      if (++restarts > 3) break;
      hinv.setIdentity();
      continue;
    }

    const Eigen::VectorXd s = found.x - res.x;
    const Eigen::VectorXd y = found.g - res.g;
    res.x = found.x;
    res.f = found.f;
    res.g = found.g;
    if (res.g.lpNorm<Eigen::Infinity>() < opt.gtol) {
      res.converged = true;
      ++res.iterations;
      return res;
    }
    const double sy = s.dot(y);
    if (sy > 1e-300) {
      if (res.iterations == 0) hinv *= sy / y.squaredNorm();
      const double rho = 1.0 / sy;
      const Eigen::VectorXd hy = hinv * y;
      hinv += rho * rho * (sy + y.dot(hy)) * (s * s.transpose()) - rho * (hy * s.transpose() + s * hy.transpose());
    }
  }
  res.converged = res.g.lpNorm<Eigen::Infinity>() < opt.gtol;
  return res;
}

}  // namespace ptvqe
