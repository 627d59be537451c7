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

// Heatmaps of learned context weights: neighbor influence on one cell,
// micro-cell influence inside macro-cells, and their change over training.

#pragma once

#include <filesystem>
#include <string>

#include "pancan/model.hpp"

namespace pancan {

struct Heatmap {
  GridSpec grid;
  Mat values;  // n_rows x n_cols
};

/// Walk weights received by every neighbor of cell at one layer, averaged
/// over the orders and directions in which the cell has neighbors.
Heatmap context_map(const PanCAN& model, const ForwardTrace& trace, int scale, int layer,
                    int cell);

/// Attention weight of every micro-cell of scale s within its macro-cell.
Heatmap scale_map(const PanCAN& model, const ForwardTrace& trace, int scale);

/// Grayscale P5 image, max value white, each cell drawn as cell_px squares.
void write_pgm(const Heatmap& h, const std::filesystem::path& path, int cell_px = 16);
/// Color P6 image on a blue-to-red ramp; marked cell outlined in green.
void write_ppm(const Heatmap& h, const std::filesystem::path& path, int cell_px = 16,
               int marked_cell = -1);
/// "row,col,weight" lines with full precision.
void write_csv(const Heatmap& h, const std::filesystem::path& path);
std::string to_json(const Heatmap& h);

}  // namespace pancan
