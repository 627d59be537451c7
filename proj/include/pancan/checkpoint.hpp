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

// Versioned binary checkpoint: a text header line, the configuration text
// that produced the parameters, then little-endian doubles (parameters in
// visit order, followed by the EMA shadow when present).

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "pancan/numeric.hpp"

namespace pancan {

struct Checkpoint {
  std::string config_text;
  std::vector<double> values;
  std::vector<double> ema;  // empty when absent
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::vector<double> pack(const std::vector<Mat>& tensors);
/// Fills tensors (already shaped) from values; throws DimensionError on a
/// count mismatch.
void unpack(const std::vector<double>& values, std::vector<Mat>& tensors);

}  // namespace pancan
