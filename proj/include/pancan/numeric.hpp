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

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace pancan {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Mat = MatrixX<double>;
using Vec = VectorX<double>;
using Index = Eigen::Index;

// Error taxonomy shared by every module.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DimensionError : Error {
  using Error::Error;
};
struct ConfigError : Error {
  using Error::Error;
};
struct InputError : Error {
  using Error::Error;
};
struct ParseError : Error {
  using Error::Error;
};
struct EvaluationError : Error {
  using Error::Error;
};
struct DivergenceError : Error {
  using Error::Error;
};
struct ConvergenceError : Error {
  ConvergenceError(const std::string& what, double residual)
      : Error(what), residual(residual) {}
  double residual;
};

std::string shape_str(Index rows, Index cols);

template <typename Derived>
std::string shape_str(const Eigen::MatrixBase<Derived>& m) {
  return shape_str(m.rows(), m.cols());
}

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  return m.allFinite();
}

/// Builds a matrix from row-major data, rejecting NaN/Inf.
Mat from_row_major(Index rows, Index cols, std::span<const double> data);

template <typename A, typename B>
auto matmul(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  using Scalar = typename A::Scalar;
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: " + shape_str(a) + " x " + shape_str(b));
  }
  MatrixX<Scalar> out = a * b;
  return out;
}

/// Row-wise softmax with max subtraction; every row sums to one.
template <typename Derived>
MatrixX<typename Derived::Scalar> softmax_rows(
    const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  MatrixX<Scalar> out(a.rows(), a.cols());
  for (Index r = 0; r < a.rows(); ++r) {
    if (a.cols() == 0) break;
    const Scalar peak = a.row(r).maxCoeff();
    out.row(r) = (a.row(r).array() - peak).exp().matrix();
    out.row(r) /= out.row(r).sum();
  }
  return out;
}

template <typename Derived>
MatrixX<typename Derived::Scalar> relu(const Eigen::MatrixBase<Derived>& a) {
  return a.cwiseMax(typename Derived::Scalar(0));
}

template <typename Derived>
VectorX<typename Derived::Scalar> l2_col_norms(
    const Eigen::MatrixBase<Derived>& a) {
  return a.colwise().norm().transpose();
}

template <typename W, typename X>
auto affine(const Eigen::MatrixBase<W>& w, const Eigen::MatrixBase<X>& x) {
  return matmul(w, x);
}

/// Vertical stacking; all blocks must share a column count.
Mat concat_rows(std::span<const Mat> blocks);

/// Spectral norm (largest singular value), from the eigenvalues of AᵀA.
double spectral_norm(const Mat& a);

}  // namespace pancan
