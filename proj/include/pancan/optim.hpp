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

#include <span>
#include <vector>

#include "pancan/numeric.hpp"

namespace pancan {

struct AdamWState {
  std::vector<Mat> m;
  std::vector<Mat> v;
  long step = 0;
};

struct AdamWOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

AdamWState adamw_init(std::span<const Mat> params);

/// One decoupled-weight-decay Adam step with bias correction. Throws
/// EvaluationError (leaving params and state untouched) on a non-finite
/// gradient.
void adamw_step(std::span<Mat> params, std::span<const Mat> grads, AdamWState& state,
                double lr, double weight_decay, const AdamWOptions& opt = {});

/// shadow = decay * shadow + (1 - decay) * params.
void ema_update(std::span<Mat> shadow, std::span<const Mat> params, double decay);

/// Linear warmup over the first warmup_frac of steps, then cosine decay to
/// zero at total_steps.
double lr_at(long step, long total_steps, double peak, double warmup_frac = 0.05);

}  // namespace pancan
