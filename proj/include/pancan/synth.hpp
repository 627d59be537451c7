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

// Synthetic multi-label task whose labels depend on the spatial layout of
// motifs rather than on which motifs occur. Each label owns its motifs:
//   type 0 (pair):        one A and one B; positive iff |A - B|_1 <= 2
//   type 1 (cluster):     three C; positive iff one 2x2 macro-cell holds all
//   type 2 (directional): one E and one F; positive iff F sits right of E
//   type 3 (presence):    positive iff D occurs
// Label l has type l % 4. Every other cell is background.

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "pancan/grid.hpp"

namespace pancan {

struct SynthOptions {
  std::uint64_t seed = 0;
  int n_train = 500;
  int n_val = 100;
  int n_test = 200;
  int rows = 8;
  int cols = 10;
  int labels = 4;
  double noise = 0.1;  // std of the additive Gaussian noise
  int d_pos = 4;
};

struct DataSplit {
  GridSpec grid;
  std::vector<Mat> feats;  // in_dim x cells per sample
  Mat labels;              // N x L, entries +-1
  // Motif id per cell (0 background) when generated; empty when loaded.
  std::vector<std::vector<int>> motifs;

  int size() const { return static_cast<int>(feats.size()); }
  Index dim() const { return feats.empty() ? 0 : feats.front().rows(); }
};

struct SynthDataset {
  DataSplit train;
  DataSplit val;
  DataSplit test;
};

enum class LabelKind { kPair = 0, kCluster = 1, kDirectional = 2, kPresence = 3 };

LabelKind label_kind(int label);
/// Number of distinct foreground motifs used by L labels.
int motif_count(int labels);
int synth_dim(const SynthOptions& opt);

SynthDataset make_synth(const SynthOptions& opt);

/// Label vector (+-1) computed directly from a motif map.
Vec evaluate_predicates(const std::vector<int>& motifs, const GridSpec& grid, int labels);

/// PANCAN-DATA v1 file: header line, then per sample its labels followed by
/// its features cell by cell, all little-endian doubles.
void save_split(const DataSplit& split, const std::filesystem::path& path);
DataSplit load_split(const std::filesystem::path& path);

}  // namespace pancan
