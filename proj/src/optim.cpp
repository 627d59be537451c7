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

#include "pancan/optim.hpp"

#include <cmath>
#include <numbers>

namespace pancan {

AdamWState adamw_init(std::span<const Mat> params) {
  AdamWState s;
  for (const Mat& p : params) {
    s.m.push_back(Mat::Zero(p.rows(), p.cols()));
    s.v.push_back(Mat::Zero(p.rows(), p.cols()));
  }
  return s;
}

void adamw_step(std::span<Mat> params, std::span<const Mat> grads, AdamWState& state,
                double lr, double weight_decay, const AdamWOptions& opt) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    throw DimensionError("adamw_step: " + std::to_string(params.size()) + " params, " +
                         std::to_string(grads.size()) + " grads, " +
                         std::to_string(state.m.size()) + " moments");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (grads[i].rows() != params[i].rows() || grads[i].cols() != params[i].cols()) {
      throw DimensionError("adamw_step: tensor " + std::to_string(i) + " grad " +
                           shape_str(grads[i]) + " vs param " + shape_str(params[i]));
    }
    if (!grads[i].allFinite()) {
      throw EvaluationError("adamw_step: non-finite gradient in tensor " + std::to_string(i) +
                            ", step rejected");
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(opt.beta1, t);
  const double c2 = 1.0 - std::pow(opt.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = opt.beta1 * state.m[i] + (1.0 - opt.beta1) * grads[i];
    state.v[i] = opt.beta2 * state.v[i] + (1.0 - opt.beta2) * grads[i].cwiseProduct(grads[i]);
    params[i] *= 1.0 - lr * weight_decay;
    const Mat mhat = state.m[i] / c1;
    const Mat vhat = state.v[i] / c2;
    params[i].array() -= lr * mhat.array() / (vhat.array().sqrt() + opt.eps);
  }
}

void ema_update(std::span<Mat> shadow, std::span<const Mat> params, double decay) {
  if (shadow.size() != params.size()) throw DimensionError("ema_update: tensor count mismatch");
  for (std::size_t i = 0; i < shadow.size(); ++i) {
    if (shadow[i].rows() != params[i].rows() || shadow[i].cols() != params[i].cols()) {
      throw DimensionError("ema_update: shape mismatch in tensor " + std::to_string(i));
    }
    shadow[i] = decay * shadow[i] + (1.0 - decay) * params[i];
  }
}

double lr_at(long step, long total_steps, double peak, double warmup_frac) {
  if (total_steps <= 0) return peak;
  const long warmup = static_cast<long>(std::ceil(warmup_frac * static_cast<double>(total_steps)));
  if (step < warmup) return peak * static_cast<double>(step + 1) / static_cast<double>(warmup);
  const double span = static_cast<double>(std::max(total_steps - warmup, 1L));
  const double progress = std::min(static_cast<double>(step - warmup) / span, 1.0);
  return 0.5 * peak * (1.0 + std::cos(std::numbers::pi * progress));
}

}  // namespace pancan
