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

// Multi-order context-aware mapping layer. For every cell and direction c,
// each configured order k aggregates its ring members through random-walk
// attention; the per-order contexts are stacked, moved across cells by the
// learned adjacency P_c, scaled by sqrt(gamma), stacked under the scale's
// input features and projected back to a fixed width through a ReLU.

#pragma once

#include <memory>
#include <random>
#include <vector>

#include "pancan/attention.hpp"
#include "pancan/grid.hpp"
#include "pancan/neighborhood.hpp"
#include "pancan/params.hpp"

namespace pancan {

struct MocamnLayerSpec {
  Index in_dim = 0;    // width of the layer input
  Index base_dim = 0;  // width of the scale input re-injected at every layer
  Index out_dim = 0;
  Index attn_dim = 0;  // width of every per-order context
  std::vector<int> orders{1};
  double gamma = 0.0;
  WalkRule walk;

  Index context_dim(int directions) const {
    return directions * static_cast<Index>(orders.size()) * attn_dim;
  }
};

/// Static neighborhood structure of one grid, shared by every layer.
struct MocamnStructure {
  GridSpec grid;
  int directions = kMaxDirections;
  // rings[k - 1][c]: member lists of the order-k ring in direction c.
  std::vector<std::vector<std::shared_ptr<const MemberLists>>> rings;
  std::vector<LearnableAdjacency> adjacency;  // support per direction
  std::vector<int> cells;                     // 0..n-1

  int max_order() const { return static_cast<int>(rings.size()); }
};

MocamnStructure build_mocamn_structure(const GridSpec& grid, int directions,
                                       int max_order, int scale = 0);

struct LayerTrace {
  std::vector<int> orders;
  // rings[order position][c]
  std::vector<std::vector<AttentionRecord>> rings;
  std::vector<Mat> adjacency;  // normalized P_c
};

void check_layer(const MocamnLayerSpec& spec, const MocamnStructure& s);

MocamnLayerWeights<Mat> init_mocamn_layer(const MocamnLayerSpec& spec,
                                          const MocamnStructure& s, std::mt19937_64& rng);

/// h: in_dim x n layer input, phi0: base_dim x n scale input.
Var mocamn_layer(const Var& h, const Var& phi0, const MocamnLayerWeights<Var>& w,
                 const MocamnLayerSpec& spec, const MocamnStructure& s,
                 LayerTrace* trace = nullptr);

/// Layer t consumes layer t-1's output; every layer re-injects the input.
Var mocamn_stack(const Var& input, std::span<const MocamnLayerWeights<Var>> layers,
                 std::span<const MocamnLayerSpec> specs, const MocamnStructure& s,
                 std::vector<LayerTrace>* trace = nullptr);

CellFeatures mocamn_layer(const CellFeatures& cf, const CellFeatures& phi0,
                          const MocamnLayerWeights<Mat>& w, const MocamnLayerSpec& spec,
                          const MocamnStructure& s);

/// Uniform(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
Mat glorot(Index rows, Index cols, std::mt19937_64& rng);

}  // namespace pancan
