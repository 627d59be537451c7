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

// Randomized self-checks of the kernel reference: Gram of the unfolded map
// against the iterated recursion, fixed-point convergence, and the
// objective gradient against central differences.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pancan/numeric.hpp"

namespace pancan {

struct VerifyOptions {
  int n = 12;       // cells
  int C = 4;        // adjacency matrices
  int T = 3;        // unfoldings
  int d0 = 4;       // base feature width
  int trials = 50;
  std::uint64_t seed = 0;
  std::optional<double> gamma;  // default: 0.9 / (C * max ||P_c||^2)
};

struct OracleCheck {
  std::string name;
  bool passed = false;
  double worst = 0.0;  // largest observed error
  double limit = 0.0;
  std::string detail;  // failure reason, empty on success
};

/// Random non-negative, row-normalized matrix with about half the entries
/// set; the instance generator of the suite.
Mat random_transition(int n, std::uint64_t seed);

std::vector<OracleCheck> run_kernel_oracles(const VerifyOptions& opt);

}  // namespace pancan
