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

#include "pancan/cscamn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pancan/mocamn.hpp"

namespace pancan {

MacroCellMap macro_cell_map(const GridSpec& fine, int window, int stride) {
  if (stride < 1 || window < stride) {
    throw ConfigError("macro_cell_map: need window >= stride >= 1");
  }
  MacroCellMap map;
  map.fine = fine;
  map.window = window;
  map.stride = stride;
  map.coarse = fine;
  map.coarse.n_rows = coarse_extent(fine.n_rows, window, stride);
  map.coarse.n_cols = coarse_extent(fine.n_cols, window, stride);
  auto members = std::make_shared<MemberLists>();
  for (int R = 0; R < map.coarse.n_rows; ++R) {
    for (int C = 0; C < map.coarse.n_cols; ++C) {
      auto& m = members->emplace_back();
      for (int r = R * stride; r < std::min(R * stride + window, fine.n_rows); ++r) {
        for (int c = C * stride; c < std::min(C * stride + window, fine.n_cols); ++c) {
          m.push_back(fine.index(r, c));
        }
      }
    }
  }
  map.members = std::move(members);
  return map;
}

Vec saliency(const Mat& feats) { return l2_col_norms(feats); }

int chebyshev(const GridSpec& grid, int a, int b) {
  return std::max(std::abs(grid.row_of(a) - grid.row_of(b)),
                  std::abs(grid.col_of(a) - grid.col_of(b)));
}

std::vector<int> select_anchors(const Vec& sal, const MacroCellMap& map, int nms_radius) {
  const auto& members = *map.members;
  if (sal.size() != map.fine.cells()) {
    throw DimensionError("select_anchors: saliency for " + std::to_string(sal.size()) +
                         " cells, fine grid has " + std::to_string(map.fine.cells()));
  }
  auto by_saliency = [&sal](int a, int b) {
    return sal(a) > sal(b) || (sal(a) == sal(b) && a < b);
  };
  std::vector<std::vector<int>> ranked(members.size());
  for (std::size_t M = 0; M < members.size(); ++M) {
    if (members[M].empty()) throw ConfigError("select_anchors: empty macro-cell");
    ranked[M] = members[M];
    std::sort(ranked[M].begin(), ranked[M].end(), by_saliency);
  }
  std::vector<std::size_t> order(members.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return sal(ranked[a].front()) > sal(ranked[b].front());
  });

  std::vector<int> anchors(members.size(), -1);
  std::vector<int> chosen;
  for (std::size_t M : order) {
    int pick = ranked[M].front();
    for (int cand : ranked[M]) {
      const bool clear = std::all_of(chosen.begin(), chosen.end(), [&](int a) {
        return chebyshev(map.fine, cand, a) > nms_radius;
      });
      if (clear) {
        pick = cand;
        break;
      }
    }
    anchors[M] = pick;
    chosen.push_back(pick);
  }
  return anchors;
}

CscamnWeights<Mat> init_cscamn(const CscamnSpec& spec, std::mt19937_64& rng) {
  if (spec.in_dim < 1 || spec.attn_dim < 1 || spec.out_dim < 1) {
    throw ConfigError("cscamn: dimensions must be positive");
  }
  return {glorot(spec.attn_dim, spec.in_dim, rng), glorot(spec.attn_dim, spec.in_dim, rng),
          glorot(spec.in_dim, spec.in_dim, rng), glorot(spec.out_dim, 2 * spec.in_dim, rng),
          Mat::Zero(spec.out_dim, 1)};
}

Vec fuse_macro(int anchor, const std::vector<int>& members, const Mat& feats,
               const CscamnWeights<Mat>& w) {
  if (std::find(members.begin(), members.end(), anchor) == members.end()) {
    throw InputError("fuse_macro: anchor is not a member of the macro-cell");
  }
  Mat cand(feats.rows(), static_cast<Index>(members.size()));
  for (std::size_t j = 0; j < members.size(); ++j) cand.col(static_cast<Index>(j)) = feats.col(members[j]);
  const Vec anchor_feat = feats.col(anchor);
  const Vec probs = transition_probs(anchor_feat, cand, w.query, w.member);
  Vec fused = Vec::Zero(w.value.rows());
  for (Index j = 0; j < cand.cols(); ++j) fused += probs(j) * (w.value * cand.col(j));
  Vec stacked(fused.size() + anchor_feat.size());
  stacked << fused, anchor_feat;
  return relu(Mat(w.down * stacked + w.bias)).col(0);
}

Var cscamn_module(const Var& fine, const MacroCellMap& map, const CscamnWeights<Var>& w,
                  const CscamnSpec& spec, CscamnTrace* trace) {
  if (fine.cols() != map.fine.cells()) {
    throw DimensionError("cscamn_module: features have " + std::to_string(fine.cols()) +
                         " cells, map expects " + std::to_string(map.fine.cells()));
  }
  if (fine.rows() != spec.in_dim) {
    throw DimensionError("cscamn_module: feature width " + std::to_string(fine.rows()) +
                         " != " + std::to_string(spec.in_dim));
  }
  const std::vector<int> anchors = select_anchors(saliency(fine.value()), map, spec.nms_radius);
  const Var q = ad::matmul(w.query, fine);
  const Var m = ad::matmul(w.member, fine);
  const Var v = ad::matmul(w.value, fine);
  const double score_scale = 1.0 / std::sqrt(static_cast<double>(spec.in_dim));
  AttentionRecord* rec = trace ? &trace->attention : nullptr;
  const Var fused = attend(q, m, v, anchors, map.members, score_scale, WalkRule{}, rec);
  std::vector<Index> anchor_cols(anchors.begin(), anchors.end());
  const Var anchor_feats = ad::gather_cols(fine, anchor_cols);
  const Var stacked = ad::concat_rows(std::vector<Var>{fused, anchor_feats});
  if (trace != nullptr) trace->anchors = anchors;
  return ad::relu(ad::add_bias(ad::matmul(w.down, stacked), w.bias));
}

CellFeatures cscamn_module(const CellFeatures& fine, const MacroCellMap& map,
                           const CscamnWeights<Mat>& w, const CscamnSpec& spec) {
  if (!fine.grid.same_lattice(map.fine)) {
    throw ConfigError("cscamn_module: feature grid does not match the macro-cell map");
  }
  Tape tape;
  const Var out = cscamn_module(tape.constant(fine.feats), map, bind(tape, w, false), spec);
  return CellFeatures{fine.scale + 1, map.coarse, out.value()};
}

}  // namespace pancan
