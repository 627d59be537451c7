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

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pancan/metrics.hpp"
#include "pancan/model.hpp"
#include "pancan/synth.hpp"

namespace pancan {

struct TrainConfig {
  int epochs = 200;
  int batch = 6;
  double lr = 1e-4;  // peak
  double weight_decay = 1e-4;
  double ema_decay = 0.9997;
  int patience = 20;  // epochs without a validation mAP gain; 0 disables
  double warmup_frac = 0.05;
  std::uint64_t seed = 0;
};

void check_train_config(const TrainConfig& cfg);

struct EpochLog {
  int epoch = 0;
  double loss = 0.0;
  std::optional<double> val_mAP;
  double lr = 0.0;

  std::string to_json() const;
};

struct TrainResult {
  PanCANParams params;  // raw weights after the last epoch
  PanCANParams ema;     // EMA shadow at the best validation epoch
  std::vector<EpochLog> log;
  int best_epoch = 0;
  bool stopped_early = false;
};

struct TrainHooks {
  // Called after each epoch with its log entry, the raw weights and the
  // EMA shadow.
  std::function<void(const EpochLog&, const PanCANParams&, const PanCANParams&)> on_epoch;
};

/// Mini-batch AdamW on grouped_loss with warmup + cosine schedule, EMA of
/// the weights, and early stopping on validation mAP of the EMA weights.
/// Bit-reproducible for a fixed seed.
TrainResult train(const PanCAN& model, const TrainConfig& cfg, const DataSplit& train_split,
                  const DataSplit& val_split, const TrainHooks& hooks = {});

/// Sigmoid scores, one row per sample.
Mat predict_scores(const PanCAN& model, const PanCANParams& params, const DataSplit& split);

MetricsReport evaluate(const PanCAN& model, const PanCANParams& params, const DataSplit& split,
                       int topk = 3);

/// Gradient of grouped_loss over the given samples, in flatten() order.
double loss_and_grad(const PanCAN& model, const PanCANParams& params, const DataSplit& split,
                     std::span<const int> samples, std::vector<Mat>* grads);

}  // namespace pancan
