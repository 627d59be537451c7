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

// Cross-scale fusion: every macro-cell picks its most salient micro-cell
// (after non-maximum suppression) as anchor, attends from the anchor to its
// micro-cells, and projects the fused context stacked with the anchor
// features through a linear map and ReLU.

#pragma once

#include <memory>
#include <random>
#include <vector>

#include "pancan/attention.hpp"
#include "pancan/grid.hpp"
#include "pancan/params.hpp"

namespace pancan {

struct MacroCellMap {
  GridSpec fine;
  GridSpec coarse;
  int window = 2;
  int stride = 2;
  // members[macro]: micro-cell indices of the clipped window, ascending.
  std::shared_ptr<const MemberLists> members;

  const std::vector<int>& of(int macro) const {
    return (*members)[static_cast<std::size_t>(macro)];
  }
};

MacroCellMap macro_cell_map(const GridSpec& fine, int window = 2, int stride = 2);

Vec saliency(const Mat& feats);

/// Chebyshev distance between two cells of one grid.
int chebyshev(const GridSpec& grid, int a, int b);

/// Macro-cells are visited by descending best-member saliency; each takes
/// its most salient member farther than nms_radius (Chebyshev, fine grid)
/// from every anchor chosen so far, or its raw argmax when all are
/// suppressed. Ties go to the lower index.
std::vector<int> select_anchors(const Vec& sal, const MacroCellMap& map, int nms_radius);

struct CscamnSpec {
  Index in_dim = 0;
  Index attn_dim = 0;
  Index out_dim = 0;
  int nms_radius = 1;
};

struct CscamnTrace {
  std::vector<int> anchors;
  AttentionRecord attention;
};

CscamnWeights<Mat> init_cscamn(const CscamnSpec& spec, std::mt19937_64& rng);

/// Fused macro feature ReLU(down * [sum_m f_m W_v x_m ; x_anchor] + bias).
Vec fuse_macro(int anchor, const std::vector<int>& members, const Mat& feats,
               const CscamnWeights<Mat>& w);

/// fine: in_dim x fine cells -> out_dim x coarse cells. Anchor choice is a
/// hard selection made on the forward values.
Var cscamn_module(const Var& fine, const MacroCellMap& map, const CscamnWeights<Var>& w,
                  const CscamnSpec& spec, CscamnTrace* trace = nullptr);

CellFeatures cscamn_module(const CellFeatures& fine, const MacroCellMap& map,
                           const CscamnWeights<Mat>& w, const CscamnSpec& spec);

}  // namespace pancan
