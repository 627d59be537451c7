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

#include "pancan/train.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "json.hpp"
#include "pancan/optim.hpp"

namespace pancan {

void check_train_config(const TrainConfig& c) {
  if (c.epochs < 1) throw ConfigError("train: epochs must be positive");
  if (c.batch < 1) throw ConfigError("train: batch must be positive");
  if (!(c.lr > 0.0)) throw ConfigError("train: lr must be positive");
  if (c.weight_decay < 0.0) throw ConfigError("train: weight_decay must be non-negative");
  if (!(c.ema_decay > 0.0 && c.ema_decay < 1.0)) {
    throw ConfigError("train: ema_decay must lie in (0, 1)");
  }
  if (c.patience < 0) throw ConfigError("train: patience must be non-negative");
  if (!(c.warmup_frac >= 0.0 && c.warmup_frac < 1.0)) {
    throw ConfigError("train: warmup_frac must lie in [0, 1)");
  }
}

std::string EpochLog::to_json() const {
  nlohmann::json j{{"epoch", epoch}, {"loss", loss}, {"lr", lr}};
  j["val_mAP"] = val_mAP ? nlohmann::json(*val_mAP) : nlohmann::json(nullptr);
  return j.dump();
}

double loss_and_grad(const PanCAN& model, const PanCANParams& params, const DataSplit& split,
                     std::span<const int> samples, std::vector<Mat>* grads) {
  Tape tape;
  const PanCANVars w = bind(tape, params, grads != nullptr);
  std::vector<Var> logits;
  Mat labels(static_cast<Index>(samples.size()), split.labels.cols());
  for (std::size_t b = 0; b < samples.size(); ++b) {
    const auto i = static_cast<std::size_t>(samples[b]);
    logits.push_back(model.forward(split.feats[i], w));
    labels.row(static_cast<Index>(b)) = split.labels.row(static_cast<Index>(i));
  }
  const Var loss = grouped_loss(logits, labels, model.config(), w.heads);
  const double value = loss.value()(0, 0);
  if (!std::isfinite(value)) throw EvaluationError("train: non-finite loss");
  if (grads != nullptr) {
    tape.backward(loss);
    grads->clear();
    visit(w, [&](const std::string&, const Var& v) { grads->push_back(tape.grad(v)); });
  }
  return value;
}

Mat predict_scores(const PanCAN& model, const PanCANParams& params, const DataSplit& split) {
  Mat scores(split.size(), model.config().num_labels);
  for (int i = 0; i < split.size(); ++i) {
    scores.row(i) = model.predict(split.feats[static_cast<std::size_t>(i)], params).probs.transpose();
  }
  return scores;
}

MetricsReport evaluate(const PanCAN& model, const PanCANParams& params, const DataSplit& split,
                       int topk) {
  if (split.size() < 1) throw InputError("evaluate: empty split");
  if (split.labels.cols() != model.config().num_labels) {
    throw DimensionError("evaluate: split has " + std::to_string(split.labels.cols()) +
                         " labels, model has " + std::to_string(model.config().num_labels));
  }
  return compute_metrics(predict_scores(model, params, split), split.labels, topk);
}

TrainResult train(const PanCAN& model, const TrainConfig& cfg, const DataSplit& tr,
                  const DataSplit& val, const TrainHooks& hooks) {
  check_train_config(cfg);
  if (tr.size() < 1) throw InputError("train: empty training split");
  if (tr.labels.cols() != model.config().num_labels) {
    throw DimensionError("train: split has " + std::to_string(tr.labels.cols()) +
                         " labels, model has " + std::to_string(model.config().num_labels));
  }
  std::mt19937_64 rng(cfg.seed);
  TrainResult result;
  result.params = model.init_params(rng());
  std::vector<Mat> flat = flatten(result.params);
  std::vector<Mat> shadow = flat;
  std::vector<Mat> best = flat;
  AdamWState state = adamw_init(flat);

  const int n = tr.size();
  const long steps_per_epoch = (n + cfg.batch - 1) / cfg.batch;
  const long total = steps_per_epoch * cfg.epochs;
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  double best_map = -1.0;
  int since_best = 0;
  long step = 0;
  std::vector<Mat> grads;
  PanCANParams scratch = result.params;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    double lr = 0.0;
    for (int at = 0; at < n; at += cfg.batch) {
      const std::span<const int> batch(order.data() + at,
                                       static_cast<std::size_t>(std::min(cfg.batch, n - at)));
      unflatten(std::span<const Mat>(flat), scratch);
      loss_sum += loss_and_grad(model, scratch, tr, batch, &grads);
      lr = lr_at(step++, total, cfg.lr, cfg.warmup_frac);
      adamw_step(flat, grads, state, lr, cfg.weight_decay);
      ema_update(shadow, flat, cfg.ema_decay);
    }
    EpochLog entry;
    entry.epoch = epoch;
    entry.loss = loss_sum / static_cast<double>(steps_per_epoch);
    entry.lr = lr;
    PanCANParams ema_params = result.params;
    unflatten(std::span<const Mat>(shadow), ema_params);
    bool improved = true;
    if (val.size() > 0) {
      entry.val_mAP = evaluate(model, ema_params, val).mAP;
      improved = *entry.val_mAP > best_map;
    }
    if (improved) {
      best_map = entry.val_mAP.value_or(best_map);
      best = shadow;
      result.best_epoch = epoch;
      since_best = 0;
    } else {
      ++since_best;
    }
    result.log.push_back(entry);
    unflatten(std::span<const Mat>(flat), scratch);
    if (hooks.on_epoch) hooks.on_epoch(entry, scratch, ema_params);
    if (cfg.patience > 0 && since_best >= cfg.patience) {
      result.stopped_early = epoch < cfg.epochs;
      break;
    }
  }
  unflatten(std::span<const Mat>(flat), result.params);
  result.ema = result.params;
  unflatten(std::span<const Mat>(best), result.ema);
  return result;
}

}  // namespace pancan
