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

// Image lattice, cross-scale grid hierarchy, positional codes and the
// per-cell feature container shared by every network stage.

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "pancan/numeric.hpp"

namespace pancan {

struct GridSpec {
  int height_px = 1;
  int width_px = 1;
  int n_rows = 1;
  int n_cols = 1;

  int cells() const { return n_rows * n_cols; }
  int index(int row, int col) const { return row * n_cols + col; }
  int row_of(int cell) const { return cell / n_cols; }
  int col_of(int cell) const { return cell % n_cols; }
  bool same_lattice(const GridSpec& o) const {
    return n_rows == o.n_rows && n_cols == o.n_cols;
  }
};

struct PixelBox {
  int top = 0;
  int left = 0;
  int height = 0;
  int width = 0;
  bool operator==(const PixelBox&) const = default;
};

/// Finest (index 0) to coarsest; successive lattices shrink by the
/// window/stride rule and the last one is 1x1.
struct ScalePyramid {
  std::vector<GridSpec> scales;
  int window = 2;
  int stride = 2;

  std::size_t size() const { return scales.size(); }
};

/// d x cells feature matrix, one column per cell in row-major cell order.
struct CellFeatures {
  int scale = 0;
  GridSpec grid;
  Mat feats;

  Index dim() const { return feats.rows(); }
  bool operator==(const CellFeatures& o) const {
    return grid.same_lattice(o.grid) && feats.rows() == o.feats.rows() &&
           feats.cols() == o.feats.cols() && feats == o.feats;
  }
};

struct Image {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> rgb;  // row-major, 3 bytes per pixel

  std::uint8_t at(int y, int x, int channel) const {
    return rgb[static_cast<std::size_t>((y * width + x) * 3 + channel)];
  }
};

/// Cell boundaries sit at ceil(i * extent / cells) along each axis.
std::vector<PixelBox> partition(const GridSpec& grid);

/// Number of macro-cells needed to cover n micro-cells with a clipped
/// sliding window.
int coarse_extent(int n, int window, int stride);

/// max_scales = 0 keeps coarsening until the lattice is 1x1.
ScalePyramid build_pyramid(const GridSpec& base, int window = 2, int stride = 2,
                           int max_scales = 0);

/// 2-D sinusoidal code, d_pos rows per cell. Pair j encodes the row index
/// (even j) or column index (odd j) at angular frequency 2^-(j/2).
Mat positional_encoding(const GridSpec& grid, int d_pos);
double positional_frequency(int pair);

inline constexpr int kToyVisualDim = 11;

/// Mean RGB plus an 8-bin intensity histogram per cell, with the
/// positional code stacked underneath.
CellFeatures toy_featurize(const Image& image, const GridSpec& grid, int d_pos = 8);

Image read_ppm(const std::filesystem::path& path);
void write_ppm(const Image& image, const std::filesystem::path& path);

/// Header: "PANCAN-FEATS v1 rows=<r> cols=<c> dim=<d>\n", then r*c*d
/// little-endian doubles, cell after cell in row-major cell order.
void save_features(const CellFeatures& cf, const std::filesystem::path& path);
CellFeatures load_features(const std::filesystem::path& path);

}  // namespace pancan
