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

#include "pancan/visualize.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "json.hpp"

namespace pancan {
namespace {

std::uint8_t level(double v, double peak) {
  if (peak <= 0.0) return 0;
  return static_cast<std::uint8_t>(std::clamp(v / peak, 0.0, 1.0) * 255.0 + 0.5);
}

void check_scale(const PanCAN& model, const ForwardTrace& trace, int scale) {
  if (scale < 0 || scale >= model.num_scales()) {
    throw ConfigError("scale " + std::to_string(scale) + " outside 0.." +
                      std::to_string(model.num_scales() - 1));
  }
  if (trace.mocamn.size() != static_cast<std::size_t>(model.num_scales())) {
    throw ConfigError("trace does not belong to this model");
  }
}

}  // namespace

Heatmap context_map(const PanCAN& model, const ForwardTrace& trace, int scale, int layer,
                    int cell) {
  check_scale(model, trace, scale);
  const auto& layers = trace.mocamn[static_cast<std::size_t>(scale)];
  if (layer < 0 || layer >= static_cast<int>(layers.size())) {
    throw ConfigError("layer " + std::to_string(layer) + " outside 0.." +
                      std::to_string(layers.size() - 1));
  }
  const GridSpec& g = model.structure(scale).grid;
  if (cell < 0 || cell >= g.cells()) {
    throw ConfigError("cell " + std::to_string(cell) + " outside the " + std::to_string(g.n_rows) +
                      "x" + std::to_string(g.n_cols) + " grid");
  }
  Heatmap h{g, Mat::Zero(g.n_rows, g.n_cols)};
  int lists = 0;
  for (const auto& per_c : layers[static_cast<std::size_t>(layer)].rings) {
    for (const AttentionRecord& rec : per_c) {
      if (rec.members.empty()) continue;
      const auto& members = rec.members[static_cast<std::size_t>(cell)];
      const auto& weights = rec.weights[static_cast<std::size_t>(cell)];
      if (members.empty()) continue;
      ++lists;
      for (std::size_t j = 0; j < members.size(); ++j) {
        h.values(g.row_of(members[j]), g.col_of(members[j])) += weights[j];
      }
    }
  }
  if (lists > 0) h.values /= static_cast<double>(lists);
  return h;
}

Heatmap scale_map(const PanCAN& model, const ForwardTrace& trace, int scale) {
  check_scale(model, trace, scale);
  if (scale + 1 >= model.num_scales()) {
    throw ConfigError("scale " + std::to_string(scale) + " has no coarser scale to feed");
  }
  const GridSpec& g = model.structure(scale).grid;
  Heatmap h{g, Mat::Zero(g.n_rows, g.n_cols)};
  const AttentionRecord& rec = trace.cscamn[static_cast<std::size_t>(scale)].attention;
  for (std::size_t M = 0; M < rec.members.size(); ++M) {
    for (std::size_t j = 0; j < rec.members[M].size(); ++j) {
      const int c = rec.members[M][j];
      // Overlapping windows add up.
      h.values(g.row_of(c), g.col_of(c)) += rec.weights[M][j];
    }
  }
  return h;
}

void write_pgm(const Heatmap& h, const std::filesystem::path& path, int cell_px) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  const int H = h.grid.n_rows * cell_px;
  const int W = h.grid.n_cols * cell_px;
  out << "P5\n" << W << " " << H << "\n255\n";
  const double peak = h.values.maxCoeff();
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) out.put(static_cast<char>(level(h.values(y / cell_px, x / cell_px), peak)));
  }
}

void write_ppm(const Heatmap& h, const std::filesystem::path& path, int cell_px,
               int marked_cell) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  const int H = h.grid.n_rows * cell_px;
  const int W = h.grid.n_cols * cell_px;
  out << "P6\n" << W << " " << H << "\n255\n";
  const double peak = h.values.maxCoeff();
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      const int r = y / cell_px;
      const int c = x / cell_px;
      const bool edge = y % cell_px == 0 || x % cell_px == 0 || y % cell_px == cell_px - 1 ||
                        x % cell_px == cell_px - 1;
      if (marked_cell == h.grid.index(r, c) && edge) {
        out.put(0).put(static_cast<char>(255)).put(0);
        continue;
      }
      const std::uint8_t v = level(h.values(r, c), peak);
      out.put(static_cast<char>(v)).put(0).put(static_cast<char>(255 - v));
    }
  }
}

void write_csv(const Heatmap& h, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  out << "row,col,weight\n";
  char buf[64];
  for (int r = 0; r < h.grid.n_rows; ++r) {
    for (int c = 0; c < h.grid.n_cols; ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", h.values(r, c));
      out << r << "," << c << "," << buf << "\n";
    }
  }
}

std::string to_json(const Heatmap& h) {
  nlohmann::json rows = nlohmann::json::array();
  for (int r = 0; r < h.grid.n_rows; ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (int c = 0; c < h.grid.n_cols; ++c) row.push_back(h.values(r, c));
    rows.push_back(row);
  }
  return nlohmann::json{{"rows", h.grid.n_rows}, {"cols", h.grid.n_cols}, {"weights", rows}}.dump();
}

}  // namespace pancan
