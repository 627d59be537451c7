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
#include <span>
#include <vector>

#include "pancan/autodiff.hpp"

namespace pancan {

/// Scalar-valued function of a list of matrix parameters, recorded on a tape.
using TapeFunction = std::function<Var(Tape&, std::span<const Var>)>;

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t worst_param = 0;
  Index worst_row = 0;
  Index worst_col = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t entries_checked = 0;
};

/// Compares reverse-mode gradients with central differences entry by entry.
/// Relative error per entry is |a - fd| / max(|a|, |fd|, 1e-8).
/// Throws EvaluationError when f is non-finite at params or a perturbation.
GradCheckReport grad_check(const TapeFunction& f, const std::vector<Mat>& params,
                           double eps = 1e-5);

/// Evaluates f without keeping the tape.
double evaluate(const TapeFunction& f, const std::vector<Mat>& params);

/// Value and gradients of f at params.
double value_and_grad(const TapeFunction& f, const std::vector<Mat>& params,
                      std::vector<Mat>& grads);

}  // namespace pancan
