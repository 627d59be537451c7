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

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "pancan/run_config.hpp"

namespace pancan {

enum class AblationAxis { kOrder, kDepth, kThreshold, kInterval, kModule };

AblationAxis parse_axis(const std::string& name);
std::string axis_name(AblationAxis axis);
/// Header of the first table column.
std::string axis_column(AblationAxis axis);
std::vector<std::string> default_values(AblationAxis axis);

/// Row label for one value, e.g. "Second-Order" or "PanCAN without Random walk".
std::string row_label(AblationAxis axis, const std::string& value);

/// The base configuration with one axis set to value; throws ConfigError on
/// an unknown value.
RunConfig apply_ablation(const RunConfig& base, AblationAxis axis, const std::string& value);

struct AblationRow {
  std::string label;
  double mAP = 0;
  double CF1 = 0;
  double OF1 = 0;
};

struct AblationTable {
  std::string first_column;
  std::vector<AblationRow> rows;

  std::string to_csv() const;
  std::string to_json() const;
};

using AblationProgress = std::function<void(const std::string& label)>;

/// Retrains per value with the base seeds and scores the EMA weights on the
/// test split (validation split when there is no test split).
AblationTable run_ablation(AblationAxis axis, const std::vector<std::string>& values,
                           const RunConfig& base, const SynthDataset& data,
                           const AblationProgress& progress = {});

}  // namespace pancan
