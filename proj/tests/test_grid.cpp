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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <tuple>

#include "doctest.h"
#include "pancan/grid.hpp"

using namespace pancan;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
  return fs::temp_directory_path() / ("pancan_test_grid_" + name);
}

std::vector<std::pair<int, int>> lattice(const ScalePyramid& p) {
  std::vector<std::pair<int, int>> out;
  for (const GridSpec& g : p.scales) out.push_back({g.n_rows, g.n_cols});
  return out;
}

}  // namespace

TEST_CASE("partition tiles the image exactly once") {
  for (const auto& [h, w, r, c] : std::vector<std::tuple<int, int, int, int>>{
           {448, 448, 8, 10}, {7, 5, 3, 2}, {10, 10, 10, 10}, {9, 13, 4, 5}}) {
    const GridSpec g{h, w, r, c};
    const auto boxes = partition(g);
    REQUIRE(boxes.size() == static_cast<std::size_t>(r * c));
    std::vector<int> hits(static_cast<std::size_t>(h * w), 0);
    for (const PixelBox& b : boxes) {
      CHECK(b.height >= 1);
      CHECK(b.width >= 1);
      for (int y = b.top; y < b.top + b.height; ++y) {
        for (int x = b.left; x < b.left + b.width; ++x) ++hits[static_cast<std::size_t>(y * w + x)];
      }
    }
    CHECK(std::all_of(hits.begin(), hits.end(), [](int v) { return v == 1; }));
  }
  // Boundaries at ceil(i * extent / cells): 7 px in 3 rows -> 0, 3, 5, 7.
  const auto boxes = partition(GridSpec{7, 1, 3, 1});
  CHECK(boxes[0] == PixelBox{0, 0, 3, 1});
  CHECK(boxes[1] == PixelBox{3, 0, 2, 1});
  CHECK(boxes[2] == PixelBox{5, 0, 2, 1});
  CHECK_THROWS_AS(partition(GridSpec{2, 2, 3, 1}), ConfigError);
}

TEST_CASE("pyramid over an 8x10 grid") {
  const ScalePyramid p = build_pyramid(GridSpec{448, 448, 8, 10});
  const std::vector<std::pair<int, int>> expected{{8, 10}, {4, 5}, {2, 3}, {1, 2}, {1, 1}};
  CHECK(lattice(p) == expected);
  const ScalePyramid q = build_pyramid(GridSpec{448, 448, 4, 5});
  CHECK(lattice(q) == std::vector<std::pair<int, int>>{{4, 5}, {2, 3}, {1, 2}, {1, 1}});
  CHECK(build_pyramid(GridSpec{448, 448, 8, 10}, 2, 2, 2).size() == 2);
  CHECK(build_pyramid(GridSpec{1, 1, 1, 1}).size() == 1);
  CHECK_THROWS_AS(build_pyramid(GridSpec{8, 8, 8, 8}, 1, 1), ConfigError);
  CHECK_THROWS_AS(build_pyramid(GridSpec{8, 8, 8, 8}, 2, 3), ConfigError);
}

TEST_CASE("coarse extent counts clipped windows") {
  // Window starts 0, s, 2s, ... until the window reaches the end.
  for (int n = 1; n <= 12; ++n) {
    for (int s = 1; s <= 3; ++s) {
      for (int w = std::max(s, 2); w <= 4; ++w) {
        int count = 1;
        while ((count - 1) * s + w < n) ++count;
        CHECK(coarse_extent(n, w, s) == count);
      }
    }
  }
}

TEST_CASE("positional code") {
  const GridSpec g{4, 6, 4, 6};
  const Mat code = positional_encoding(g, 8);
  CHECK(code.rows() == 8);
  CHECK(code.cols() == 24);
  const int cell = g.index(3, 5);
  // Pairs: row at 1, col at 1, row at 1/2, col at 1/2.
  CHECK(code(0, cell) == doctest::Approx(std::sin(3.0)));
  CHECK(code(1, cell) == doctest::Approx(std::cos(3.0)));
  CHECK(code(2, cell) == doctest::Approx(std::sin(5.0)));
  CHECK(code(5, cell) == doctest::Approx(std::cos(1.5)));
  CHECK(code(6, cell) == doctest::Approx(std::sin(2.5)));
  CHECK_THROWS_AS(positional_encoding(g, 3), ConfigError);
}

TEST_CASE("toy features: color means and brightness histogram") {
  Image img{2, 4, std::vector<std::uint8_t>(2 * 4 * 3)};
  // Left 2x2 block black, right block white except one red pixel.
  for (int y = 0; y < 2; ++y) {
    for (int x = 2; x < 4; ++x) {
      for (int ch = 0; ch < 3; ++ch) img.rgb[static_cast<std::size_t>((y * 4 + x) * 3 + ch)] = 255;
    }
  }
  img.rgb[(1 * 4 + 3) * 3 + 1] = 0;
  img.rgb[(1 * 4 + 3) * 3 + 2] = 0;
  const CellFeatures cf = toy_featurize(img, GridSpec{2, 4, 1, 2}, 2);
  REQUIRE(cf.feats.rows() == kToyVisualDim + 2);
  CHECK(cf.feats.col(0).head(3).isZero());
  CHECK(cf.feats(3, 0) == 1.0);  // all four pixels in the darkest bin
  CHECK(cf.feats(0, 1) == 1.0);
  CHECK(cf.feats(1, 1) == doctest::Approx(0.75));
  // Brightness (r+g+b)*8/768: white -> 7 (capped), red 255 -> 2.
  CHECK(cf.feats(3 + 7, 1) == doctest::Approx(0.75));
  CHECK(cf.feats(3 + 2, 1) == doctest::Approx(0.25));
}

TEST_CASE("PPM and feature files round-trip") {
  Image img{3, 2, {}};
  for (int i = 0; i < 18; ++i) img.rgb.push_back(static_cast<std::uint8_t>(i * 13));
  const fs::path ppm = temp_file("img.ppm");
  write_ppm(img, ppm);
  const Image back = read_ppm(ppm);
  CHECK(back.height == 3);
  CHECK(back.rgb == img.rgb);

  CellFeatures cf{0, GridSpec{2, 3, 2, 3}, Mat(4, 6)};
  for (Index i = 0; i < cf.feats.size(); ++i) cf.feats.data()[i] = 0.1 * static_cast<double>(i) - 1.0 / 3.0;
  const fs::path f = temp_file("feats.bin");
  save_features(cf, f);
  CHECK(load_features(f) == cf);

  // Drop the last 5 bytes: the error names the offset and the shortfall.
  const auto size = fs::file_size(f);
  fs::resize_file(f, size - 5);
  try {
    load_features(f);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("byte offset " + std::to_string(size - 5)) != std::string::npos);
    CHECK(msg.find("missing 5 bytes") != std::string::npos);
  }
  std::ofstream(f) << "PANCAN-FEATS v2 rows=1 cols=1 dim=1\n";
  CHECK_THROWS_AS(load_features(f), ParseError);
}

TEST_CASE("partition: common shapes") {
  const auto boxes = partition(GridSpec{400, 500, 8, 10});
  REQUIRE(boxes.size() == 80);
  for (const PixelBox& b : boxes) {
    CHECK(b.height == 50);
    CHECK(b.width == 50);
  }
  CHECK(partition(GridSpec{6, 9, 1, 1}) == std::vector<PixelBox>{{0, 0, 6, 9}});
  const auto odd = partition(GridSpec{5, 7, 2, 3});
  CHECK(odd[0].height == 3);
  CHECK(odd[3].height == 2);
  CHECK(odd[0].width == 3);
  CHECK(odd[1].width == 2);
  CHECK(odd[2].width == 2);
}

TEST_CASE("positional code separates every cell and starts at phase zero") {
  const GridSpec g{8, 10, 8, 10};
  const Mat code = positional_encoding(g, 8);
  for (int a = 0; a < g.cells(); ++a) {
    for (int b = a + 1; b < g.cells(); ++b) CHECK((code.col(a) - code.col(b)).norm() > 1e-6);
  }
  for (int j = 0; j < 4; ++j) {
    CHECK(code(2 * j, 0) == 0.0);
    CHECK(code(2 * j + 1, 0) == 1.0);
  }
}

TEST_CASE("toy features against a per-pixel loop") {
  std::mt19937_64 rng(4);
  Image img{13, 17, {}};
  for (int i = 0; i < 13 * 17 * 3; ++i) img.rgb.push_back(static_cast<std::uint8_t>(rng() % 256));
  const GridSpec g{13, 17, 3, 4};
  const CellFeatures cf = toy_featurize(img, g, 4);
  const auto boxes = partition(g);
  for (int cell = 0; cell < g.cells(); ++cell) {
    std::vector<double> f(kToyVisualDim, 0.0);
    const PixelBox& b = boxes[static_cast<std::size_t>(cell)];
    for (int y = b.top; y < b.top + b.height; ++y) {
      for (int x = b.left; x < b.left + b.width; ++x) {
        double sum = 0.0;
        for (int ch = 0; ch < 3; ++ch) {
          f[static_cast<std::size_t>(ch)] += img.at(y, x, ch) / 255.0;
          sum += img.at(y, x, ch);
        }
        const int bin = std::min(7, static_cast<int>(std::floor(sum / 3.0 / 32.0)));
        f[static_cast<std::size_t>(3 + bin)] += 1.0;
      }
    }
    for (int k = 0; k < kToyVisualDim; ++k) {
      CHECK(cf.feats(k, cell) == doctest::Approx(f[static_cast<std::size_t>(k)] / (b.height * b.width)).epsilon(1e-12));
    }
  }
  // Constant image: identical visual columns.
  Image white{8, 8, std::vector<std::uint8_t>(8 * 8 * 3, 255)};
  const Mat v = toy_featurize(white, GridSpec{8, 8, 4, 4}, 0).feats;
  for (Index c = 1; c < v.cols(); ++c) CHECK(v.col(c) == v.col(0));
}

TEST_CASE("an 8x10 file of 11-dim cells loads") {
  const fs::path f = temp_file("80x11.bin");
  CellFeatures cf{0, GridSpec{8, 10, 8, 10}, Mat::Constant(11, 80, 0.25)};
  save_features(cf, f);
  CHECK(fs::file_size(f) == std::string("PANCAN-FEATS v1 rows=8 cols=10 dim=11\n").size() + 80 * 11 * 8);
  CHECK(load_features(f).feats.cols() == 80);
}
