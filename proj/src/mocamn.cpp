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

#include "pancan/mocamn.hpp"

#include <algorithm>
#include <cmath>

namespace pancan {

Mat glorot(Index rows, Index cols, std::mt19937_64& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(std::max<Index>(rows + cols, 1)));
  std::uniform_real_distribution<double> dist(-a, a);
  Mat m(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) m(i, j) = dist(rng);
  }
  return m;
}

MocamnStructure build_mocamn_structure(const GridSpec& grid, int directions, int max_order,
                                       int scale) {
  MocamnStructure s;
  s.grid = grid;
  s.directions = directions;
  const AdjacencySet adj = directional_set(grid, directions);
  for (const OrderNeighborhood& ring : multi_order(adj, std::max(max_order, 1))) {
    auto& per_c = s.rings.emplace_back();
    for (int c = 0; c < directions; ++c) {
      per_c.push_back(std::make_shared<const MemberLists>(ring.members[static_cast<std::size_t>(c)]));
    }
  }
  for (const Mask& m : adj.masks) {
    // The cell itself stays in the support so a layer can keep its own
    // ring context as well as shift in its c-neighbor's.
    Mask support = m;
    support.diagonal().setConstant(true);
    s.adjacency.push_back(LearnableAdjacency::from_mask(support, scale));
  }
  s.cells.resize(static_cast<std::size_t>(grid.cells()));
  for (int i = 0; i < grid.cells(); ++i) s.cells[static_cast<std::size_t>(i)] = i;
  return s;
}

void check_layer(const MocamnLayerSpec& spec, const MocamnStructure& s) {
  if (spec.orders.empty()) throw ConfigError("mocamn: order list is empty");
  for (int k : spec.orders) {
    if (k < 1 || k > s.max_order()) {
      throw ConfigError("mocamn: order " + std::to_string(k) + " outside structure range 1.." +
                        std::to_string(s.max_order()));
    }
  }
  if (spec.gamma < 0.0) throw ConfigError("mocamn: gamma must be non-negative");
  if (spec.in_dim < 1 || spec.base_dim < 1 || spec.out_dim < 1 || spec.attn_dim < 1) {
    throw ConfigError("mocamn: dimensions must be positive");
  }
}

MocamnLayerWeights<Mat> init_mocamn_layer(const MocamnLayerSpec& spec,
                                          const MocamnStructure& s, std::mt19937_64& rng) {
  check_layer(spec, s);
  MocamnLayerWeights<Mat> w;
  for (std::size_t i = 0; i < spec.orders.size(); ++i) {
    w.orders.push_back({glorot(spec.attn_dim, spec.in_dim, rng),
                        glorot(spec.attn_dim, spec.in_dim, rng),
                        glorot(spec.attn_dim, spec.in_dim, rng)});
  }
  for (const LearnableAdjacency& la : s.adjacency) w.adjacency.push_back(Mat::Zero(1, la.num_weights()));
  w.projection = glorot(spec.out_dim, spec.base_dim + spec.context_dim(s.directions), rng);
  w.bias = Mat::Zero(spec.out_dim, 1);
  return w;
}

Var mocamn_layer(const Var& h, const Var& phi0, const MocamnLayerWeights<Var>& w,
                 const MocamnLayerSpec& spec, const MocamnStructure& s, LayerTrace* trace) {
  check_layer(spec, s);
  const Index n = s.grid.cells();
  if (h.cols() != n || phi0.cols() != n) {
    throw DimensionError("mocamn_layer: features have " + std::to_string(h.cols()) + "/" +
                         std::to_string(phi0.cols()) + " cells, grid has " + std::to_string(n));
  }
  if (h.rows() != spec.in_dim || phi0.rows() != spec.base_dim) {
    throw DimensionError("mocamn_layer: input widths " + std::to_string(h.rows()) + "/" +
                         std::to_string(phi0.rows()) + " do not match the layer spec");
  }
  if (w.orders.size() != spec.orders.size() ||
      w.adjacency.size() != static_cast<std::size_t>(s.directions)) {
    throw ConfigError("mocamn_layer: weights do not match the layer spec");
  }
  Tape& tape = *h.tape();
  const int C = s.directions;
  if (trace != nullptr) {
    trace->orders = spec.orders;
    trace->rings.assign(spec.orders.size(), std::vector<AttentionRecord>(static_cast<std::size_t>(C)));
    trace->adjacency.clear();
  }

  std::vector<Var> blocks{phi0};
  if (spec.gamma == 0.0) {
    // sqrt(gamma) = 0 removes every context block.
    blocks.push_back(tape.constant(Mat::Zero(spec.context_dim(C), n)));
  } else {
    const double score_scale = 1.0 / std::sqrt(static_cast<double>(spec.in_dim));
    // contexts[c][order position]
    std::vector<std::vector<Var>> contexts(static_cast<std::size_t>(C));
    for (std::size_t oi = 0; oi < spec.orders.size(); ++oi) {
      const OrderWeights<Var>& ow = w.orders[oi];
      const Var q = ad::matmul(ow.query, h);
      const Var m = ad::matmul(ow.member, h);
      const Var v = ad::matmul(ow.value, h);
      const auto& rings = s.rings[static_cast<std::size_t>(spec.orders[oi] - 1)];
      for (int c = 0; c < C; ++c) {
        AttentionRecord* rec = trace ? &trace->rings[oi][static_cast<std::size_t>(c)] : nullptr;
        contexts[static_cast<std::size_t>(c)].push_back(
            attend(q, m, v, s.cells, rings[static_cast<std::size_t>(c)], score_scale, spec.walk, rec));
      }
    }
    const double root = std::sqrt(spec.gamma);
    for (int c = 0; c < C; ++c) {
      const Var phi_c = ad::concat_rows(contexts[static_cast<std::size_t>(c)]);
      const Var p = normalize_rows(s.adjacency[static_cast<std::size_t>(c)],
                                   w.adjacency[static_cast<std::size_t>(c)]);
      if (trace != nullptr) trace->adjacency.push_back(p.value());
      // Column i gathers sum_j P_c(i, j) * phi_c(x_j).
      blocks.push_back(ad::scale(ad::matmul(phi_c, ad::transpose(p)), root));
    }
  }
  const Var stacked = ad::concat_rows(blocks);
  return ad::relu(ad::add_bias(ad::matmul(w.projection, stacked), w.bias));
}

Var mocamn_stack(const Var& input, std::span<const MocamnLayerWeights<Var>> layers,
                 std::span<const MocamnLayerSpec> specs, const MocamnStructure& s,
                 std::vector<LayerTrace>* trace) {
  if (layers.empty() || layers.size() != specs.size()) {
    throw ConfigError("mocamn_stack: need T >= 1 layers with matching specs");
  }
  if (trace != nullptr) trace->assign(layers.size(), LayerTrace{});
  Var h = input;
  for (std::size_t t = 0; t < layers.size(); ++t) {
    h = mocamn_layer(h, input, layers[t], specs[t], s, trace ? &(*trace)[t] : nullptr);
  }
  return h;
}

CellFeatures mocamn_layer(const CellFeatures& cf, const CellFeatures& phi0,
                          const MocamnLayerWeights<Mat>& w, const MocamnLayerSpec& spec,
                          const MocamnStructure& s) {
  if (!cf.grid.same_lattice(s.grid) || !phi0.grid.same_lattice(s.grid)) {
    throw ConfigError("mocamn_layer: grids of features and neighborhoods disagree");
  }
  Tape tape;
  const Var out = mocamn_layer(tape.constant(cf.feats), tape.constant(phi0.feats),
                               bind(tape, w, false), spec, s);
  return CellFeatures{cf.scale, cf.grid, out.value()};
}

}  // namespace pancan
