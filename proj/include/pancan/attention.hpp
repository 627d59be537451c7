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

// Random-walk context aggregation: attention scores between a query cell
// and its candidate members, softmax transition probabilities, thresholded
// walk selection and the probability-weighted value sum.

#pragma once

#include <memory>
#include <span>
#include <vector>

#include "pancan/autodiff.hpp"

namespace pancan {

enum class WalkMode { kAttention, kUniform };

/// kMaxRatio keeps members whose probability reaches tau times the largest
/// probability; kAbsolute compares raw probabilities against tau.
enum class ThresholdMode { kMaxRatio, kAbsolute };

struct WalkRule {
  WalkMode mode = WalkMode::kAttention;
  double tau = 0.0;
  ThresholdMode threshold = ThresholdMode::kMaxRatio;
};

struct WalkSelection {
  std::vector<int> kept;  // positions into the member list, ascending
  Vec probs;              // renormalized over kept, aligned with kept
};

/// (W_q x)^T (W_m y) / sqrt(dim x)
double attn_score(const Vec& center, const Vec& member, const Mat& w_query,
                  const Mat& w_member);

/// Softmax of the scores of every member column against center. Empty
/// member matrix gives an empty vector.
Vec transition_probs(const Vec& center, const Mat& members, const Mat& w_query,
                     const Mat& w_member);

WalkSelection select_walk(const Vec& probs, double tau,
                          ThresholdMode mode = ThresholdMode::kMaxRatio);

/// sum_m probs[m] * W_v members[:, kept[m]]; zero vector when nothing is kept.
Vec order_context(const Mat& members, const WalkSelection& walk, const Mat& w_value);

/// Kept members (as column indices) and their weights for every output.
struct AttentionRecord {
  std::vector<std::vector<int>> members;
  std::vector<std::vector<double>> weights;
};

using MemberLists = std::vector<std::vector<int>>;

/// Batched, differentiable aggregation. Output column o attends from
/// queries[:, query_cols[o]] to keys[:, m] for m in members[o] and returns
/// the walk-weighted sum of values[:, m]. Selection of kept members is
/// treated as a constant by the backward rule.
Var attend(const Var& queries, const Var& keys, const Var& values,
           std::span<const int> query_cols,
           std::shared_ptr<const MemberLists> members, double score_scale,
           const WalkRule& rule, AttentionRecord* record = nullptr);

}  // namespace pancan
