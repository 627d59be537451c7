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

#include "pancan/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace pancan {
namespace {

std::vector<Var> bind(Tape& tape, const std::vector<Mat>& params) {
  std::vector<Var> vars;
  vars.reserve(params.size());
  for (const Mat& p : params) vars.push_back(tape.parameter(p));
  return vars;
}

double scalar_of(const Var& out) {
  if (out.rows() != 1 || out.cols() != 1) {
    throw DimensionError("grad_check: function must return 1x1, got " +
                         shape_str(out.value()));
  }
  const double v = out.value()(0, 0);
  if (!std::isfinite(v)) throw EvaluationError("grad_check: non-finite loss");
  return v;
}

}  // namespace

double evaluate(const TapeFunction& f, const std::vector<Mat>& params) {
  Tape tape;
  const std::vector<Var> vars = bind(tape, params);
  return scalar_of(f(tape, vars));
}

double value_and_grad(const TapeFunction& f, const std::vector<Mat>& params,
                      std::vector<Mat>& grads) {
  Tape tape;
  const std::vector<Var> vars = bind(tape, params);
  const Var out = f(tape, vars);
  const double value = scalar_of(out);
  tape.backward(out);
  grads.clear();
  for (const Var& v : vars) grads.push_back(tape.grad(v));
  return value;
}

GradCheckReport grad_check(const TapeFunction& f, const std::vector<Mat>& params,
                           double eps) {
  std::vector<Mat> analytic;
  value_and_grad(f, params, analytic);

  GradCheckReport report;
  std::vector<Mat> probe = params;
  for (std::size_t p = 0; p < params.size(); ++p) {
    for (Index c = 0; c < params[p].cols(); ++c) {
      for (Index r = 0; r < params[p].rows(); ++r) {
        const double base = params[p](r, c);
        probe[p](r, c) = base + eps;
        const double up = evaluate(f, probe);
        probe[p](r, c) = base - eps;
        const double down = evaluate(f, probe);
        probe[p](r, c) = base;

        const double fd = (up - down) / (2.0 * eps);
        const double a = analytic[p](r, c);
        const double denom = std::max({std::abs(a), std::abs(fd), 1e-8});
        const double rel = std::abs(a - fd) / denom;
        ++report.entries_checked;
        if (rel > report.max_rel_error) {
          report.max_rel_error = rel;
          report.worst_param = p;
          report.worst_row = r;
          report.worst_col = c;
          report.analytic = a;
          report.numeric = fd;
        }
      }
    }
  }
  return report;
}

}  // namespace pancan
