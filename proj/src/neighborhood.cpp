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

#include "pancan/neighborhood.hpp"

#include <algorithm>
#include <memory>

namespace pancan {

std::vector<int> OrderNeighborhood::merged(int cell) const {
  std::vector<int> out;
  for (const auto& per_c : members) {
    const auto& m = per_c[static_cast<std::size_t>(cell)];
    out.insert(out.end(), m.begin(), m.end());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

Mask directional_adjacency(const GridSpec& grid, Direction c) {
  const int n = grid.cells();
  Mask mask = Mask::Constant(n, n, false);
  for (int cell = 0; cell < n; ++cell) {
    int r = grid.row_of(cell);
    int col = grid.col_of(cell);
    switch (c) {
      case Direction::kUp: --r; break;
      case Direction::kDown: ++r; break;
      case Direction::kLeft: --col; break;
      case Direction::kRight: ++col; break;
    }
    if (r >= 0 && r < grid.n_rows && col >= 0 && col < grid.n_cols) {
      mask(cell, grid.index(r, col)) = true;
    }
  }
  return mask;
}

AdjacencySet directional_set(const GridSpec& grid, int num_directions) {
  if (num_directions < 1 || num_directions > kMaxDirections) {
    throw ConfigError("directional_set: C must be in [1, 4], got " +
                      std::to_string(num_directions));
  }
  AdjacencySet adj{grid, {}};
  for (int c = 0; c < num_directions; ++c) {
    adj.masks.push_back(directional_adjacency(grid, static_cast<Direction>(c)));
  }
  return adj;
}

AdjacencySet merged_set(const AdjacencySet& adj) {
  Mask all = Mask::Constant(adj.cells(), adj.cells(), false);
  for (const Mask& m : adj.masks) all = all || m;
  return AdjacencySet{adj.grid, {all}};
}

Mat to_dense(const Mask& mask) { return mask.cast<double>(); }

std::vector<OrderNeighborhood> multi_order(const AdjacencySet& adj, int max_order) {
  if (max_order < 1) {
    throw std::invalid_argument("order_k: order must be >= 1, got " +
                                std::to_string(max_order));
  }
  const int n = adj.cells();
  const int C = adj.count();

  std::vector<std::vector<int>> step(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (const Mask& m : adj.masks) {
        if (m(i, j)) {
          step[i].push_back(j);
          break;
        }
      }
    }
  }

  std::vector<OrderNeighborhood> orders;
  // seen(i, j): j is the center or already in a lower-order ring of i.
  Mask seen = Mask::Identity(n, n);

  OrderNeighborhood first;
  first.order = 1;
  first.members.assign(static_cast<std::size_t>(C), std::vector<std::vector<int>>(n));
  for (int c = 0; c < C; ++c) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (adj.masks[c](i, j) && i != j) first.members[c][i].push_back(j);
      }
    }
  }
  orders.push_back(std::move(first));

  for (int k = 2; k <= max_order; ++k) {
    const OrderNeighborhood& prev = orders.back();
    for (int c = 0; c < C; ++c) {
      for (int i = 0; i < n; ++i) {
        for (int j : prev.members[c][i]) seen(i, j) = true;
      }
    }
    OrderNeighborhood next;
    next.order = k;
    next.members.assign(static_cast<std::size_t>(C), std::vector<std::vector<int>>(n));
    for (int c = 0; c < C; ++c) {
      for (int i = 0; i < n; ++i) {
        std::vector<int>& out = next.members[c][i];
        for (int via : prev.members[c][i]) {
          for (int j : step[via]) {
            if (!seen(i, j)) out.push_back(j);
          }
        }
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
      }
    }
    orders.push_back(std::move(next));
  }
  return orders;
}

OrderNeighborhood order_k(const AdjacencySet& adj, int k) {
  return multi_order(adj, k).back();
}

LearnableAdjacency LearnableAdjacency::from_mask(const Mask& support, int scale, int layer) {
  LearnableAdjacency la;
  la.support = support;
  la.scale = scale;
  la.layer = layer;
  for (Index i = 0; i < support.rows(); ++i) {
    for (Index j = 0; j < support.cols(); ++j) {
      if (support(i, j)) la.entries.emplace_back(static_cast<int>(i), static_cast<int>(j));
    }
  }
  return la;
}

namespace {

void check_weights(const LearnableAdjacency& la, const Mat& w) {
  if (w.rows() != 1 || w.cols() != la.num_weights()) {
    throw DimensionError("normalize_rows: weights " + shape_str(w) + " for " +
                         std::to_string(la.num_weights()) + " support entries");
  }
}

}  // namespace

Mat normalize_rows(const LearnableAdjacency& la, const Mat& weights) {
  check_weights(la, weights);
  const Index n = la.cells();
  Mat out = Mat::Zero(n, la.support.cols());
  std::size_t e = 0;
  while (e < la.entries.size()) {
    const int row = la.entries[e].first;
    std::size_t end = e;
    double peak = weights(0, static_cast<Index>(e));
    while (end < la.entries.size() && la.entries[end].first == row) {
      peak = std::max(peak, weights(0, static_cast<Index>(end)));
      ++end;
    }
    double total = 0.0;
    for (std::size_t j = e; j < end; ++j) {
      const double v = std::exp(weights(0, static_cast<Index>(j)) - peak);
      out(row, la.entries[j].second) = v;
      total += v;
    }
    for (std::size_t j = e; j < end; ++j) out(row, la.entries[j].second) /= total;
    e = end;
  }
  return out;
}

Var normalize_rows(const LearnableAdjacency& la, const Var& weights) {
  check_weights(la, weights.value());
  auto shared = std::make_shared<const LearnableAdjacency>(la);
  Tape& tape = *weights.tape();
  const std::size_t self = tape.size();
  return tape.record(normalize_rows(la, weights.value()), {weights},
                     [shared, weights, self](Tape& t, const Mat& g) {
                       const Mat& p = t.value(self);
                       const auto& entries = shared->entries;
                       Mat dw = Mat::Zero(1, static_cast<Index>(entries.size()));
                       std::size_t e = 0;
                       while (e < entries.size()) {
                         const int row = entries[e].first;
                         std::size_t end = e;
                         double dot = 0.0;
                         while (end < entries.size() && entries[end].first == row) {
                           const int col = entries[end].second;
                           dot += p(row, col) * g(row, col);
                           ++end;
                         }
                         for (std::size_t j = e; j < end; ++j) {
                           const int col = entries[j].second;
                           dw(0, static_cast<Index>(j)) = p(row, col) * (g(row, col) - dot);
                         }
                         e = end;
                       }
                       t.accumulate(weights, dw);
                     });
}

}  // namespace pancan
