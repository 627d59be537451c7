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

// End-to-end network: per-scale context stacks cascaded through cross-scale
// fusion, per-scale image features, a global feature, multi-head fusion of
// the scale tokens and a grouped linear classification head.

#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "pancan/cscamn.hpp"
#include "pancan/grid.hpp"
#include "pancan/mocamn.hpp"
#include "pancan/params.hpp"

namespace pancan {

enum class ModelVariant {
  kPanCAN,
  kContextFree,  // grouped head on sum-pooled, independently encoded cells
};

struct ModelConfig {
  int grid_rows = 8;
  int grid_cols = 10;
  int window = 2;
  int stride = 2;
  int num_scales = 0;  // 0: coarsen down to 1x1
  int in_dim = 0;
  int hidden_dim = 16;
  int attn_dim = 8;
  int fusion_dim = 16;
  int heads = 4;
  // Per scale; empty picks {1, 2} on grids at least 4x4 and {1} elsewhere.
  std::vector<std::vector<int>> orders;
  // Per scale layer count; empty means 3 everywhere.
  std::vector<int> depth;
  int directions = 4;
  double gamma = -1.0;  // negative: 0.9 / directions
  double tau = 0.71;
  ThresholdMode threshold = ThresholdMode::kMaxRatio;
  bool random_walk = true;
  bool multi_order = true;
  bool cross_scale = true;
  int nms_radius = 1;
  int num_labels = 0;
  std::vector<std::vector<int>> groups;  // empty: one group of every label
  std::vector<double> group_weights;     // C_g; empty: all ones
  ModelVariant variant = ModelVariant::kPanCAN;
};

struct Prediction {
  Vec logits;
  Vec probs;
};

/// Per-forward record of every attention weight, for visual exports.
struct ForwardTrace {
  std::vector<std::vector<LayerTrace>> mocamn;  // [scale][layer]
  std::vector<CscamnTrace> cscamn;              // [transition]
  std::vector<Mat> scale_outputs;               // psi per scale
};

struct ForwardOptions {
  // Scale tokens (index S is the global token) removed from the fusion
  // sequence.
  std::vector<int> dropped_tokens;
};

/// Validated configuration together with every static structure the
/// forward pass needs.
class PanCAN {
 public:
  explicit PanCAN(ModelConfig cfg);

  const ModelConfig& config() const { return cfg_; }
  const ScalePyramid& pyramid() const { return pyramid_; }
  int num_scales() const { return static_cast<int>(pyramid_.size()); }
  const MocamnStructure& structure(int scale) const { return structures_[static_cast<std::size_t>(scale)]; }
  const std::vector<MocamnLayerSpec>& layer_specs(int scale) const {
    return layer_specs_[static_cast<std::size_t>(scale)];
  }
  const MacroCellMap& macro_map(int transition) const { return macro_maps_[static_cast<std::size_t>(transition)]; }
  const CscamnSpec& cscamn_spec() const { return cscamn_spec_; }
  const std::vector<int>& group_of_label() const { return group_of_label_; }

  PanCANParams init_params(std::uint64_t seed) const;
  /// Throws ConfigError when params do not have this model's layout.
  void check_params(const PanCANParams& params) const;

  /// feats: in_dim x finest cells. Returns the L x 1 logits.
  Var forward(const Mat& feats, const PanCANVars& w, const ForwardOptions& opts = {},
              ForwardTrace* trace = nullptr) const;
  Prediction predict(const Mat& feats, const PanCANParams& params,
                     ForwardTrace* trace = nullptr) const;

  /// Mean of the finest input cells, projected to the fusion width.
  Var global_feature(const Var& feats, const PanCANVars& w) const;

 private:
  ModelConfig cfg_;
  ScalePyramid pyramid_;
  std::vector<MocamnStructure> structures_;
  std::vector<std::vector<MocamnLayerSpec>> layer_specs_;
  std::vector<MacroCellMap> macro_maps_;
  CscamnSpec cscamn_spec_;
  std::vector<int> group_of_label_;
};

/// Fills defaults and checks consistency; throws ConfigError.
ModelConfig resolve(ModelConfig cfg);

/// Multi-head scaled dot-product self-attention over the token columns,
/// mean-pooled to one fusion_dim x 1 vector.
Var multihead_fuse(const Var& tokens, const FusionWeights<Var>& w, int heads);
Vec multihead_fuse(const Mat& tokens, const FusionWeights<Mat>& w, int heads);

/// Logits of every group scattered back to label order (L x 1).
Var grouped_head(const Var& feature, std::span<const GroupHeadWeights<Var>> heads,
                 const std::vector<std::vector<int>>& groups, int num_labels);

/// Maps labels in {-1, +1} to {0, 1}; throws InputError otherwise.
Mat binary_targets(const Mat& labels_pm1);

/// sum_g ( 1/2 ||W_g||^2 + C_g * sum_batch BCE(group g labels) ).
/// logits[b] is the L x 1 output for row b of labels (B x L, entries +-1).
Var grouped_loss(std::span<const Var> logits, const Mat& labels, const ModelConfig& cfg,
                 std::span<const GroupHeadWeights<Var>> heads);
double grouped_loss(std::span<const Prediction> preds, const Mat& labels,
                    const ModelConfig& cfg, const PanCANParams& params);

/// Greedy agglomerative grouping of L labels into G groups. Starting from
/// singletons, repeatedly merges the pair of groups with the largest
/// cross co-occurrence; ties prefer the lowest label indices.
std::vector<std::vector<int>> group_labels(const Mat& cooccurrence, int G);

/// Label co-occurrence counts (diagonal: positives per label).
Mat cooccurrence(const Mat& labels_pm1);

/// Inverse positive-label frequency of each group.
std::vector<double> inverse_frequency_weights(const Mat& labels_pm1,
                                              const std::vector<std::vector<int>>& groups);

}  // namespace pancan
