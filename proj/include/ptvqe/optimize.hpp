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
// Quasi-Newton minimization with analytic gradients.
#pragma once

#include <functional>

#include <Eigen/Dense>

namespace ptvqe {

/// Returns f(x) and writes the gradient into g.
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& g)>;

struct BfgsOptions {
  double gtol = 1e-8;  // on the max-norm of the gradient
  int max_iter = 5000;
};

struct BfgsResult {
  Eigen::VectorXd x;
  double f = 0.0;
  Eigen::VectorXd g;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
};

/// BFGS on the inverse Hessian with a strong-Wolfe line search.  The
/// sufficient-decrease test tolerates round-off near a minimum.
BfgsResult bfgs_minimize(const Objective& fn, Eigen::VectorXd x0, const BfgsOptions& opt = {});

}  // namespace ptvqe
