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

// Context-aware kernel reference: the fidelity/context/regularization
// objective, its fixed-point recursion K <- S + gamma * sum_c P_c K P_c^T,
// and the explicit unfolded feature map whose Gram matrix reproduces the
// recursion. Everything here is plain dense algebra and serves as an oracle
// for the learned network.

#pragma once

#include <span>
#include <vector>

#include "pancan/numeric.hpp"

namespace pancan {

struct KernelState {
  Mat S;
  double gamma = 0.0;
  std::vector<Mat> adj;
  Mat K;
};

/// levels[t] is the d_t x n map after t unfoldings; d_{t+1} = d0 + C * d_t.
struct UnfoldedMap {
  std::vector<Mat> levels;
  Index base_dim = 0;

  const Mat& top() const { return levels.back(); }
};

/// tr(-K S^T) - alpha * sum_c tr(K P_c K^T P_c^T) + beta/2 * ||K||_F^2
double objective(const Mat& K, const Mat& S, std::span<const Mat> adj, double alpha,
                 double beta);
/// Gradient of objective with respect to K.
Mat objective_gradient(const Mat& K, const Mat& S, std::span<const Mat> adj, double alpha,
                       double beta);

Mat iterate(const Mat& K, const Mat& S, double gamma, std::span<const Mat> adj);

/// gamma * sum_c ||P_c||_2^2; below one the recursion contracts in the
/// Frobenius norm.
double spectral_bound(double gamma, std::span<const Mat> adj);

/// 0.9 / (C * max_c ||P_c||_2^2); zero when every P_c vanishes.
double default_gamma(std::span<const Mat> adj);

struct FixedPointResult {
  Mat K;
  int iterations = 0;
  double bound = 0.0;
  // Per-iteration ||iterate(K_t) - K_t||, Frobenius and max-abs.
  std::vector<double> residuals;
  std::vector<double> residuals_inf;
};

/// Iterates from K = S until max |iterate(K) - K| <= tol.
/// Throws DivergenceError when spectral_bound >= 1 and ConvergenceError
/// (carrying the last residual) when max_iter is exhausted.
FixedPointResult solve(const Mat& S, double gamma, std::span<const Mat> adj,
                       double tol = 1e-10, int max_iter = 10000);

/// Linear kernel over l2-normalized columns of phi0.
Mat normalized_linear_kernel(const Mat& phi0);

UnfoldedMap unfold(const Mat& phi0, double gamma, std::span<const Mat> adj, int T);

/// Sum of the cell maps of one image.
Vec image_feature(const Mat& phi);
double image_kernel(const Mat& phi_p, const Mat& phi_q);

}  // namespace pancan
