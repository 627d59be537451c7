// Copyright 2026 The PanCAN Authors. All Rights Reserved.
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

#include "pancan/verify.hpp"

#include <algorithm>
#include <random>

#include "pancan/kernel.hpp"

namespace pancan {

Mat random_transition(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Mat P = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i != j && u(rng) < 0.5) P(i, j) = u(rng);
    }
    const double s = P.row(i).sum();
    if (s > 0.0) P.row(i) /= s;
  }
  return P;
}

std::vector<OracleCheck> run_kernel_oracles(const VerifyOptions& opt) {
  if (opt.n < 1 || opt.C < 1 || opt.T < 0 || opt.d0 < 1 || opt.trials < 1) {
    throw ConfigError("verify: n, C, d0 and trials must be positive and T non-negative");
  }
  OracleCheck gram{"gram_equals_iterate", true, 0.0, 1e-10, ""};
  OracleCheck contraction{"residual_ratio_within_bound", true, 0.0, 1e-6, ""};
  OracleCheck fixed{"fixed_point_residual", true, 0.0, 1e-8, ""};
  OracleCheck gradient{"objective_gradient", true, 0.0, 1e-6, ""};
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int trial = 0; trial < opt.trials; ++trial) {
    Mat phi0(opt.d0, opt.n);
    for (Index i = 0; i < phi0.size(); ++i) phi0.data()[i] = normal(rng);
    std::vector<Mat> adj;
    for (int c = 0; c < opt.C; ++c) adj.push_back(random_transition(opt.n, rng()));
    const double gamma = opt.gamma.value_or(default_gamma(adj));
    const Mat S = phi0.transpose() * phi0;

    // Gram of the T-fold unfolded map against T recursion steps.
    const Mat top = unfold(phi0, gamma, adj, opt.T).top();
    Mat K = S;
    for (int t = 0; t < opt.T; ++t) K = iterate(K, S, gamma, adj);
    const double dev = (top.transpose() * top - K).cwiseAbs().maxCoeff() /
                       std::max(1.0, K.cwiseAbs().maxCoeff());
    gram.worst = std::max(gram.worst, dev);

    // Fixed point: geometric residual decay and a small final residual.
    try {
      const FixedPointResult r = solve(S, gamma, adj, 1e-10, 100000);
      const double floor = 1e-8 * std::max(1.0, r.K.norm());  // rounding floor
      for (std::size_t i = 1; i < r.residuals.size(); ++i) {
        if (r.residuals[i - 1] <= floor) break;
        const double excess = r.residuals[i] / r.residuals[i - 1] - r.bound;
        contraction.worst = std::max(contraction.worst, excess);
      }
      const double res = (iterate(r.K, S, gamma, adj) - r.K).cwiseAbs().maxCoeff();
      fixed.worst = std::max(fixed.worst, res);
    } catch (const DivergenceError& e) {
      contraction.passed = fixed.passed = false;
      contraction.detail = fixed.detail = e.what();
      break;
    } catch (const ConvergenceError& e) {
      fixed.passed = false;
      fixed.detail = e.what();
    }

    // Objective gradient against central differences at a random K.
    Mat K0(opt.n, opt.n);
    for (Index i = 0; i < K0.size(); ++i) K0.data()[i] = normal(rng);
    const double alpha = 0.5, beta = 1.0, eps = 1e-5;
    const Mat G = objective_gradient(K0, S, adj, alpha, beta);
    for (Index i = 0; i < K0.size(); ++i) {
      Mat plus = K0, minus = K0;
      plus.data()[i] += eps;
      minus.data()[i] -= eps;
      const double fd = (objective(plus, S, adj, alpha, beta) - objective(minus, S, adj, alpha, beta)) /
                        (2.0 * eps);
      const double a = G.data()[i];
      const double rel = std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1.0});
      gradient.worst = std::max(gradient.worst, rel);
    }
  }
  for (OracleCheck* c : {&gram, &contraction, &fixed, &gradient}) {
    if (c->worst > c->limit) {
      c->passed = false;
      if (c->detail.empty()) c->detail = "worst error above limit";
    }
  }
  return {gram, contraction, fixed, gradient};
}

}  // namespace pancan
