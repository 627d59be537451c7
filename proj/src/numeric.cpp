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

#include "pancan/numeric.hpp"

#include <algorithm>

#include <Eigen/Eigenvalues>

namespace pancan {

std::string shape_str(Index rows, Index cols) {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

Mat from_row_major(Index rows, Index cols, std::span<const double> data) {
  if (rows < 0 || cols < 0 ||
      static_cast<Index>(data.size()) != rows * cols) {
    throw DimensionError("from_row_major: " + std::to_string(data.size()) +
                         " values for shape " + shape_str(rows, cols));
  }
  Mat out(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) {
      const double v = data[static_cast<std::size_t>(r * cols + c)];
      if (!std::isfinite(v)) {
        throw InputError("from_row_major: non-finite value at (" +
                         std::to_string(r) + "," + std::to_string(c) + ")");
      }
      out(r, c) = v;
    }
  }
  return out;
}

Mat concat_rows(std::span<const Mat> blocks) {
  if (blocks.empty()) return Mat(0, 0);
  const Index cols = blocks.front().cols();
  Index rows = 0;
  for (const Mat& b : blocks) {
    if (b.cols() != cols) {
      throw DimensionError("concat_rows: column count " +
                           std::to_string(b.cols()) + " != " +
                           std::to_string(cols));
    }
    rows += b.rows();
  }
  Mat out(rows, cols);
  Index at = 0;
  for (const Mat& b : blocks) {
    out.middleRows(at, b.rows()) = b;
    at += b.rows();
  }
  return out;
}

double spectral_norm(const Mat& a) {
  if (a.size() == 0) return 0.0;
  const Mat gram = a.transpose() * a;
  const Eigen::SelfAdjointEigenSolver<Mat> eig(gram, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(eig.eigenvalues().maxCoeff(), 0.0));
}

}  // namespace pancan
