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

#pragma once

#include <vector>

#include "pancan/autodiff.hpp"
#include "pancan/grid.hpp"

namespace pancan {

using Mask = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

enum class Direction : int { kUp = 0, kDown = 1, kLeft = 2, kRight = 3 };
inline constexpr int kMaxDirections = 4;

/// C boolean n x n masks over the cells of one grid; mask(i, j) marks j as
/// the c-typed neighbor of i.
struct AdjacencySet {
  GridSpec grid;
  std::vector<Mask> masks;

  int count() const { return static_cast<int>(masks.size()); }
  int cells() const { return grid.cells(); }
};

/// Per-direction member lists of the order-k ring around every cell:
/// members[c][cell] is sorted ascending.
struct OrderNeighborhood {
  int order = 1;
  std::vector<std::vector<std::vector<int>>> members;

  const std::vector<int>& of(int c, int cell) const {
    return members[static_cast<std::size_t>(c)][static_cast<std::size_t>(cell)];
  }
  std::vector<int> merged(int cell) const;
};

Mask directional_adjacency(const GridSpec& grid, Direction c);
/// The first num_directions of up, down, left, right.
AdjacencySet directional_set(const GridSpec& grid, int num_directions = kMaxDirections);
/// Single-mask set holding the union of all masks.
AdjacencySet merged_set(const AdjacencySet& adj);
Mat to_dense(const Mask& mask);

/// Rings of order 1..max_order. Order 1 reads the masks. Order k expands
/// every c-typed order-(k-1) member by one step of the union adjacency and
/// drops the center and every member of a lower order, so order k is the
/// c-typed slice of the graph-distance-k ring.
std::vector<OrderNeighborhood> multi_order(const AdjacencySet& adj, int max_order);
OrderNeighborhood order_k(const AdjacencySet& adj, int k);

/// Fixed support with one learnable weight per support entry.
struct LearnableAdjacency {
  Mask support;
  // Support entries in row-major order; weight j belongs to entries[j].
  std::vector<std::pair<int, int>> entries;
  int scale = 0;
  int layer = 0;

  static LearnableAdjacency from_mask(const Mask& support, int scale = 0, int layer = 0);
  Index num_weights() const { return static_cast<Index>(entries.size()); }
  Index cells() const { return support.rows(); }
};

/// Row-wise softmax over each row's support entries; empty rows stay zero.
/// weights is 1 x num_weights.
Mat normalize_rows(const LearnableAdjacency& la, const Mat& weights);
Var normalize_rows(const LearnableAdjacency& la, const Var& weights);

}  // namespace pancan
