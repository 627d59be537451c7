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

// Text run configuration with [model], [train], [data] and [output]
// sections of "key = value" lines. '#' and ';' start comments. Unknown
// sections and keys are rejected with their line number.

#pragma once

#include <filesystem>
#include <string>

#include "pancan/checkpoint.hpp"
#include "pancan/model.hpp"
#include "pancan/synth.hpp"
#include "pancan/train.hpp"

namespace pancan {

struct DataConfig {
  bool synthetic = true;
  SynthOptions synth;  // rows/cols are taken from the model grid
  std::filesystem::path train;
  std::filesystem::path val;
  std::filesystem::path test;
};

struct OutputConfig {
  std::filesystem::path dir = "runs/default";
  bool save_every_epoch = true;
};

struct RunConfig {
  ModelConfig model;
  // 0 keeps model.groups (or a single group); otherwise labels are grouped
  // from training co-occurrence into min(group_count, L) groups.
  int group_count = 2;
  bool inverse_frequency = true;  // C_g; false sets every C_g to 1
  TrainConfig train;
  DataConfig data;
  OutputConfig output;
};

RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);

/// Throws InputError naming the first missing input file.
void validate_paths(const RunConfig& cfg);

/// Loaded or generated splits for the run.
SynthDataset load_data(const RunConfig& cfg);

/// Completes the model configuration from the training split: input width,
/// label count, label groups and group weights.
ModelConfig finalize_model(const RunConfig& cfg, const DataSplit& train_split);

/// Serialized [model] section with every field explicit; parse_model_config
/// reads it back to an identical configuration.
std::string model_config_text(const ModelConfig& cfg);
ModelConfig parse_model_config(const std::string& text);

struct LoadedModel {
  PanCAN model;
  PanCANParams params;
  bool has_ema = false;
};

void save_model(const std::filesystem::path& path, const PanCAN& model,
                const PanCANParams& params, const PanCANParams* ema = nullptr);
/// prefer_ema selects the EMA shadow when the checkpoint carries one.
LoadedModel load_model(const std::filesystem::path& path, bool prefer_ema = true);

}  // namespace pancan
