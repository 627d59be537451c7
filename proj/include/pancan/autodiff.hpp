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

// Reverse-mode differentiation over dense matrices. A Tape records every
// operation of one forward pass; backward() replays the recorded rules in
// reverse order. One tape per thread; tapes are never shared.

#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

#include "pancan/numeric.hpp"

namespace pancan {

class Tape;

class Var {
 public:
  Var() = default;

  const Mat& value() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  std::size_t id() const { return id_; }
  Tape* tape() const { return tape_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  /// Receives the cotangent of the node's output and pushes cotangents to
  /// its inputs through Tape::accumulate.
  using Backward = std::function<void(Tape&, const Mat&)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Mat value);
  Var parameter(Mat value);

  /// Records an op output. The node needs a gradient iff any input does.
  Var record(Mat value, std::initializer_list<Var> inputs, Backward backward);
  Var record(Mat value, std::span<const Var> inputs, Backward backward);

  /// Seeds the 1x1 output with cotangent one and runs every rule.
  void backward(Var output);

  /// Gradient of the last backward() with respect to v; zeros if none.
  Mat grad(Var v) const;

  void accumulate(const Var& v, const Mat& g);
  bool requires_grad(const Var& v) const { return nodes_[v.id()].requires_grad; }
  const Mat& value(std::size_t id) const { return nodes_[id].value; }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Mat value;
    Mat grad;
    Backward backward;
    bool requires_grad = false;
  };
  std::deque<Node> nodes_;
};

inline const Mat& Var::value() const { return tape_->value(id_); }

namespace ad {

Var matmul(const Var& a, const Var& b);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var hadamard(const Var& a, const Var& b);
Var transpose(const Var& a);
Var relu(const Var& a);
Var softmax_rows(const Var& a);
Var concat_rows(std::span<const Var> blocks);
Var concat_cols(std::span<const Var> blocks);
Var middle_rows(const Var& a, Index start, Index count);
Var middle_cols(const Var& a, Index start, Index count);
/// Adds the column vector b to every column of x.
Var add_bias(const Var& x, const Var& b);
/// Sum over columns: d×n -> d×1.
Var col_sum(const Var& a);
/// Mean over columns: d×n -> d×1.
Var col_mean(const Var& a);
Var gather_cols(const Var& a, std::span<const Index> cols);
Var sum(const Var& a);
Var squared_norm(const Var& a);
/// Euclidean norm of every column as an n×1 vector.
Var l2_col_norms(const Var& a);
/// Σ w_ij · (softplus(z_ij) − y_ij z_ij) for targets y ∈ {0,1}.
Var bce_with_logits(const Var& logits, const Mat& targets, const Mat& weights);

}  // namespace ad
}  // namespace pancan
