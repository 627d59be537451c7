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

#include "pancan/grid.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include "pancan/binary_io.hpp"

namespace pancan {
namespace {

int ceil_div(long long a, long long b) { return static_cast<int>((a + b - 1) / b); }

std::vector<int> boundaries(int extent, int cells) {
  std::vector<int> b(static_cast<std::size_t>(cells) + 1);
  for (int i = 0; i <= cells; ++i) {
    b[static_cast<std::size_t>(i)] = ceil_div(static_cast<long long>(i) * extent, cells);
  }
  return b;
}

GridSpec coarsen(const GridSpec& g, int window, int stride) {
  GridSpec out = g;
  out.n_rows = coarse_extent(g.n_rows, window, stride);
  out.n_cols = coarse_extent(g.n_cols, window, stride);
  return out;
}

}  // namespace

std::vector<PixelBox> partition(const GridSpec& grid) {
  if (grid.height_px <= 0 || grid.width_px <= 0 || grid.n_rows <= 0 ||
      grid.n_cols <= 0) {
    throw ConfigError("partition: dimensions must be positive");
  }
  if (grid.n_rows > grid.height_px || grid.n_cols > grid.width_px) {
    throw ConfigError("partition: grid " + shape_str(grid.n_rows, grid.n_cols) +
                      " has more cells than image pixels " +
                      shape_str(grid.height_px, grid.width_px));
  }
  const std::vector<int> rb = boundaries(grid.height_px, grid.n_rows);
  const std::vector<int> cb = boundaries(grid.width_px, grid.n_cols);
  std::vector<PixelBox> boxes;
  boxes.reserve(static_cast<std::size_t>(grid.cells()));
  for (int r = 0; r < grid.n_rows; ++r) {
    for (int c = 0; c < grid.n_cols; ++c) {
      boxes.push_back(PixelBox{rb[r], cb[c], rb[r + 1] - rb[r], cb[c + 1] - cb[c]});
    }
  }
  return boxes;
}

int coarse_extent(int n, int window, int stride) {
  if (n <= window) return 1;
  return ceil_div(n - window, stride) + 1;
}

ScalePyramid build_pyramid(const GridSpec& base, int window, int stride,
                           int max_scales) {
  if (base.n_rows < 1 || base.n_cols < 1) {
    throw ConfigError("build_pyramid: empty base grid");
  }
  if (stride < 1 || window < stride || window < 2) {
    throw ConfigError("build_pyramid: need window >= max(stride, 2), got window=" +
                      std::to_string(window) + " stride=" + std::to_string(stride));
  }
  if (max_scales < 0) throw ConfigError("build_pyramid: negative scale count");
  ScalePyramid p;
  p.window = window;
  p.stride = stride;
  p.scales.push_back(base);
  while (p.scales.back().cells() > 1 &&
         (max_scales == 0 || static_cast<int>(p.scales.size()) < max_scales)) {
    p.scales.push_back(coarsen(p.scales.back(), window, stride));
  }
  return p;
}

double positional_frequency(int pair) { return std::ldexp(1.0, -(pair / 2)); }

Mat positional_encoding(const GridSpec& grid, int d_pos) {
  if (d_pos < 0 || d_pos % 2 != 0) {
    throw ConfigError("positional_encoding: d_pos must be even, got " +
                      std::to_string(d_pos));
  }
  Mat code(d_pos, grid.cells());
  for (int cell = 0; cell < grid.cells(); ++cell) {
    const double row = grid.row_of(cell);
    const double col = grid.col_of(cell);
    for (int j = 0; j < d_pos / 2; ++j) {
      const double pos = (j % 2 == 0) ? row : col;
      const double angle = pos * positional_frequency(j);
      code(2 * j, cell) = std::sin(angle);
      code(2 * j + 1, cell) = std::cos(angle);
    }
  }
  return code;
}

CellFeatures toy_featurize(const Image& image, const GridSpec& grid, int d_pos) {
  if (image.height != grid.height_px || image.width != grid.width_px) {
    throw ConfigError("toy_featurize: image " + shape_str(image.height, image.width) +
                      " does not match grid " +
                      shape_str(grid.height_px, grid.width_px));
  }
  const std::vector<PixelBox> boxes = partition(grid);
  Mat visual = Mat::Zero(kToyVisualDim, grid.cells());
  for (int cell = 0; cell < grid.cells(); ++cell) {
    const PixelBox& b = boxes[static_cast<std::size_t>(cell)];
    const double count = static_cast<double>(b.height) * b.width;
    for (int y = b.top; y < b.top + b.height; ++y) {
      for (int x = b.left; x < b.left + b.width; ++x) {
        const int r = image.at(y, x, 0);
        const int g = image.at(y, x, 1);
        const int bl = image.at(y, x, 2);
        visual(0, cell) += r / 255.0;
        visual(1, cell) += g / 255.0;
        visual(2, cell) += bl / 255.0;
        // (r+g+b)/3 * 8/256, kept in integers
        const int bin = std::min(7, (r + g + bl) * 8 / 768);
        visual(3 + bin, cell) += 1.0;
      }
    }
    visual.col(cell) /= count;
  }
  CellFeatures cf;
  cf.grid = grid;
  const Mat pos = positional_encoding(grid, d_pos);
  cf.feats.resize(visual.rows() + pos.rows(), grid.cells());
  cf.feats << visual, pos;
  return cf;
}

Image read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("read_ppm: cannot open " + path.string());
  auto token = [&in]() {
    std::string t;
    int ch;
    while ((ch = in.get()) != EOF) {
      if (ch == '#') {
        while ((ch = in.get()) != EOF && ch != '\n') {}
        continue;
      }
      if (std::isspace(ch)) {
        if (!t.empty()) break;
        continue;
      }
      t.push_back(static_cast<char>(ch));
    }
    return t;
  };
  if (token() != "P6") throw ParseError("read_ppm: not a binary PPM (P6)");
  Image img;
  int maxval = 0;
  try {
    img.width = std::stoi(token());
    img.height = std::stoi(token());
    maxval = std::stoi(token());
  } catch (const std::exception&) {
    throw ParseError("read_ppm: malformed header in " + path.string());
  }
  if (img.width <= 0 || img.height <= 0 || maxval <= 0 || maxval > 255) {
    throw ParseError("read_ppm: unsupported dimensions or maxval");
  }
  img.rgb.resize(static_cast<std::size_t>(img.width) * img.height * 3);
  in.read(reinterpret_cast<char*>(img.rgb.data()),
          static_cast<std::streamsize>(img.rgb.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.rgb.size())) {
    throw ParseError("read_ppm: truncated pixel data, missing " +
                     std::to_string(img.rgb.size() - static_cast<std::size_t>(in.gcount())) +
                     " bytes");
  }
  return img;
}

void write_ppm(const Image& image, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("write_ppm: cannot open " + path.string());
  out << "P6\n" << image.width << " " << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.rgb.data()),
            static_cast<std::streamsize>(image.rgb.size()));
}

void save_features(const CellFeatures& cf, const std::filesystem::path& path) {
  if (cf.feats.cols() != cf.grid.cells()) {
    throw DimensionError("save_features: " + std::to_string(cf.feats.cols()) +
                         " columns for " + std::to_string(cf.grid.cells()) + " cells");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("save_features: cannot open " + path.string());
  out << "PANCAN-FEATS v1 rows=" << cf.grid.n_rows << " cols=" << cf.grid.n_cols
      << " dim=" << cf.feats.rows() << "\n";
  for (Index cell = 0; cell < cf.feats.cols(); ++cell) {
    for (Index k = 0; k < cf.feats.rows(); ++k) io::write_f64_le(out, cf.feats(k, cell));
  }
  if (!out) throw Error("save_features: write failed for " + path.string());
}

CellFeatures load_features(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("load_features: cannot open " + path.string());
  std::string header;
  if (!std::getline(in, header)) {
    throw ParseError("load_features: line 1: missing header");
  }
  int rows = 0, cols = 0, dim = 0;
  char tail = 0;
  if (std::sscanf(header.c_str(), "PANCAN-FEATS v1 rows=%d cols=%d dim=%d%c", &rows,
                  &cols, &dim, &tail) != 3 ||
      rows < 1 || cols < 1 || dim < 0) {
    throw ParseError("load_features: line 1: malformed header '" + header + "'");
  }
  const std::size_t offset = header.size() + 1;
  const std::size_t count = static_cast<std::size_t>(rows) * cols * dim;
  std::vector<unsigned char> bytes(count * 8);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  const auto got = static_cast<std::size_t>(in.gcount());
  if (got != bytes.size()) {
    throw ParseError("load_features: truncated payload at byte offset " +
                     std::to_string(offset + got) + ", missing " +
                     std::to_string(bytes.size() - got) + " bytes");
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw ParseError("load_features: trailing data after byte offset " +
                     std::to_string(offset + bytes.size()) + " (shape mismatch)");
  }
  CellFeatures cf;
  cf.grid = GridSpec{rows, cols, rows, cols};
  cf.feats.resize(dim, rows * cols);
  std::size_t at = 0;
  for (Index cell = 0; cell < cf.feats.cols(); ++cell) {
    for (Index k = 0; k < dim; ++k, at += 8) {
      const double v = io::decode_f64_le(bytes.data() + at);
      if (!std::isfinite(v)) {
        throw ParseError("load_features: non-finite value at byte offset " +
                         std::to_string(offset + at));
      }
      cf.feats(k, cell) = v;
    }
  }
  return cf;
}

}  // namespace pancan
