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

// Shared helpers for the unit tests.

#pragma once

#include <cstdint>
#include <random>

#include "pancan/grad_check.hpp"
#include "pancan/model.hpp"
#include "pancan/numeric.hpp"

namespace pancan::testing {

inline Mat random_mat(Index rows, Index cols, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  Mat m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = d(rng);
  return m;
}

inline Mat random_mat(Index rows, Index cols, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  return random_mat(rows, cols, rng, scale);
}

inline double max_abs_diff(const Mat& a, const Mat& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

/// 4x4 grid, two scales, two layers per scale, three labels in two groups.
inline ModelConfig small_model_config() {
  ModelConfig c;
  c.grid_rows = 4;
  c.grid_cols = 4;
  c.num_scales = 2;
  c.in_dim = 5;
  c.num_labels = 3;
  c.hidden_dim = 6;
  c.attn_dim = 3;
  c.fusion_dim = 4;
  c.heads = 2;
  c.depth = {2};
  c.groups = {{0, 2}, {1}};
  c.group_weights = {1.5, 0.7};
  return c;
}

/// Central-difference check of the batch loss over every parameter tensor,
/// with biases and adjacency weights moved off their zero initialization.
inline GradCheckReport model_grad_check(std::uint64_t seed, double eps = 1e-5) {
  const PanCAN model(small_model_config());
  std::mt19937_64 rng(seed);
  PanCANParams p = model.init_params(seed + 1);
  std::normal_distribution<double> jitter(0.0, 0.3);
  visit(p, [&](const std::string&, Mat& x) {
    for (Index i = 0; i < x.size(); ++i) x.data()[i] += jitter(rng);
  });
  const std::vector<Mat> feats{random_mat(5, 16, rng), random_mat(5, 16, rng)};
  Mat labels(2, 3);
  labels << 1, -1, 1, -1, -1, 1;
  const TapeFunction fn = [&](Tape&, std::span<const Var> vars) {
    PanCANVars w = map<Var>(p, [](const Mat&) { return Var(); });
    std::size_t i = 0;
    visit(w, [&](const std::string&, Var& v) { v = vars[i++]; });
    std::vector<Var> logits;
    for (const Mat& f : feats) logits.push_back(model.forward(f, w));
    return grouped_loss(logits, labels, model.config(), w.heads);
  };
  return grad_check(fn, flatten(p), eps);
}

}  // namespace pancan::testing
