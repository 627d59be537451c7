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

#include <string>
#include <vector>

#include "pancan/numeric.hpp"

namespace pancan {

struct PrfScores {
  double CP = 0, CR = 0, CF1 = 0;
  double OP = 0, OR = 0, OF1 = 0;
};

/// Every value is a percentage.
struct MetricsReport {
  double mAP = 0;
  PrfScores all;   // threshold on every label
  PrfScores top3;  // at most three labels per sample, still thresholded
  std::vector<double> class_ap;       // NaN for classes without positives
  std::vector<int> excluded_classes;  // no positive label
};

inline constexpr double kDecisionThreshold = 0.5;

/// Average precision of one label column. Tied scores count as one rank
/// block: the precision at a positive is (#positives scoring >= s) /
/// (#samples scoring >= s). Returns NaN when there is no positive.
double average_precision(const Vec& scores, const Vec& labels_pm1);

/// scores are probabilities in [0, 1]; labels in {-1, +1}.
MetricsReport compute_metrics(const Mat& scores, const Mat& labels_pm1, int topk = 3);

/// Fixed-width table plus one JSON object, for console output.
std::string format_table(const MetricsReport& m);
std::string to_json(const MetricsReport& m);

}  // namespace pancan
