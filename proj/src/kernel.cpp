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

#include "pancan/kernel.hpp"

#include <algorithm>
#include <cmath>

namespace pancan {
namespace {

void check_square(const char* op, const Mat& m, Index n) {
  if (m.rows() != n || m.cols() != n) {
    throw DimensionError(std::string(op) + ": expected " + shape_str(n, n) + ", got " +
                         shape_str(m));
  }
}

void check_adjacency(const char* op, std::span<const Mat> adj, Index n) {
  for (const Mat& p : adj) check_square(op, p, n);
}

}  // namespace

double objective(const Mat& K, const Mat& S, std::span<const Mat> adj, double alpha,
                 double beta) {
  const Index n = K.rows();
  check_square("objective", K, n);
  check_square("objective", S, n);
  check_adjacency("objective", adj, n);
  double context = 0.0;
  for (const Mat& P : adj) context += (K * P * K.transpose() * P.transpose()).trace();
  return -(K * S.transpose()).trace() - alpha * context + 0.5 * beta * K.squaredNorm();
}

Mat objective_gradient(const Mat& K, const Mat& S, std::span<const Mat> adj, double alpha,
                       double beta) {
  const Index n = K.rows();
  check_square("objective_gradient", K, n);
  check_square("objective_gradient", S, n);
  check_adjacency("objective_gradient", adj, n);
  Mat g = -S + beta * K;
  for (const Mat& P : adj) {
    g -= alpha * (P * K * P.transpose() + P.transpose() * K * P);
  }
  return g;
}

Mat iterate(const Mat& K, const Mat& S, double gamma, std::span<const Mat> adj) {
  const Index n = S.rows();
  check_square("iterate", S, n);
  check_square("iterate", K, n);
  check_adjacency("iterate", adj, n);
  Mat next = S;
  for (const Mat& P : adj) next.noalias() += gamma * (P * K * P.transpose());
  return next;
}

double spectral_bound(double gamma, std::span<const Mat> adj) {
  if (gamma == 0.0) return 0.0;
  double total = 0.0;
  for (const Mat& P : adj) {
    const double s = spectral_norm(P);
    total += s * s;
  }
  return gamma * total;
}

double default_gamma(std::span<const Mat> adj) {
  double peak = 0.0;
  for (const Mat& P : adj) {
    const double s = spectral_norm(P);
    peak = std::max(peak, s * s);
  }
  if (peak == 0.0 || adj.empty()) return 0.0;
  return 0.9 / (static_cast<double>(adj.size()) * peak);
}

FixedPointResult solve(const Mat& S, double gamma, std::span<const Mat> adj, double tol,
                       int max_iter) {
  check_square("solve", S, S.rows());
  check_adjacency("solve", adj, S.rows());
  if (gamma < 0.0) throw ConfigError("solve: gamma must be non-negative");
  FixedPointResult result;
  result.bound = spectral_bound(gamma, adj);
  if (result.bound >= 1.0) {
    throw DivergenceError("solve: divergence, contraction bound " +
                          std::to_string(result.bound) + " >= 1");
  }
  Mat K = S;
  for (int it = 1; it <= max_iter; ++it) {
    Mat next = iterate(K, S, gamma, adj);
    const Mat diff = next - K;
    result.residuals.push_back(diff.norm());
    result.residuals_inf.push_back(diff.cwiseAbs().maxCoeff());
    result.iterations = it;
    if (!next.allFinite()) throw DivergenceError("solve: divergence, non-finite iterate");
    if (result.residuals_inf.back() <= tol) {
      result.K = std::move(K);
      return result;
    }
    K = std::move(next);
  }
  throw ConvergenceError("solve: no convergence after " + std::to_string(max_iter) +
                             " iterations, residual " +
                             std::to_string(result.residuals_inf.back()),
                         result.residuals_inf.back());
}

Mat normalized_linear_kernel(const Mat& phi0) {
  Mat unit = phi0;
  for (Index j = 0; j < unit.cols(); ++j) {
    const double n = unit.col(j).norm();
    if (n > 0.0) unit.col(j) /= n;
  }
  return unit.transpose() * unit;
}

UnfoldedMap unfold(const Mat& phi0, double gamma, std::span<const Mat> adj, int T) {
  if (T < 0) throw ConfigError("unfold: T must be >= 0");
  if (gamma < 0.0) throw ConfigError("unfold: gamma must be non-negative");
  check_adjacency("unfold", adj, phi0.cols());
  UnfoldedMap map;
  map.base_dim = phi0.rows();
  map.levels.push_back(phi0);
  const double root = std::sqrt(gamma);
  for (int t = 0; t < T; ++t) {
    const Mat& prev = map.levels.back();
    Mat next(phi0.rows() + static_cast<Index>(adj.size()) * prev.rows(), phi0.cols());
    next.topRows(phi0.rows()) = phi0;
    Index at = phi0.rows();
    // Block c holds (P_c prev^T)^T = prev P_c^T.
    for (const Mat& P : adj) {
      next.middleRows(at, prev.rows()) = root * (prev * P.transpose());
      at += prev.rows();
    }
    map.levels.push_back(std::move(next));
  }
  return map;
}

Vec image_feature(const Mat& phi) { return phi.rowwise().sum(); }

double image_kernel(const Mat& phi_p, const Mat& phi_q) {
  if (phi_p.rows() != phi_q.rows()) {
    throw DimensionError("image_kernel: feature dims " + std::to_string(phi_p.rows()) +
                         " vs " + std::to_string(phi_q.rows()));
  }
  return image_feature(phi_p).dot(image_feature(phi_q));
}

}  // namespace pancan
