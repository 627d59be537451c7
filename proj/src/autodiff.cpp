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

#include "pancan/autodiff.hpp"

#include <algorithm>

namespace pancan {

Var Tape::constant(Mat value) {
  nodes_.push_back(Node{std::move(value), Mat(), nullptr, false});
  return Var(this, nodes_.size() - 1);
}

Var Tape::parameter(Mat value) {
  nodes_.push_back(Node{std::move(value), Mat(), nullptr, true});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Mat value, std::initializer_list<Var> inputs,
                 Backward backward) {
  return record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()),
                std::move(backward));
}

Var Tape::record(Mat value, std::span<const Var> inputs, Backward backward) {
  bool needs = false;
  for (const Var& in : inputs) needs = needs || nodes_[in.id()].requires_grad;
  nodes_.push_back(Node{std::move(value), Mat(),
                        needs ? std::move(backward) : Backward(), needs});
  return Var(this, nodes_.size() - 1);
}

void Tape::backward(Var output) {
  Node& out = nodes_[output.id()];
  if (out.value.rows() != 1 || out.value.cols() != 1) {
    throw DimensionError("backward: output must be 1x1, got " +
                         shape_str(out.value));
  }
  for (Node& n : nodes_) n.grad.resize(0, 0);
  out.grad = Mat::Ones(1, 1);
  for (std::size_t i = nodes_.size(); i-- > 0;) {
    Node& n = nodes_[i];
    if (n.backward && n.grad.size() != 0) n.backward(*this, n.grad);
  }
}

Mat Tape::grad(Var v) const {
  const Node& n = nodes_[v.id()];
  if (n.grad.size() == 0) return Mat::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::accumulate(const Var& v, const Mat& g) {
  Node& n = nodes_[v.id()];
  if (!n.requires_grad) return;
  if (g.rows() != n.value.rows() || g.cols() != n.value.cols()) {
    throw DimensionError("accumulate: cotangent " + shape_str(g) +
                         " for value " + shape_str(n.value));
  }
  if (n.grad.size() == 0) {
    n.grad = g;
  } else {
    n.grad += g;
  }
}

namespace ad {
namespace {

Tape& tape_of(const Var& v) {
  if (!v.valid()) throw Error("ad: operand not recorded on a tape");
  return *v.tape();
}

void require_same_shape(const char* op, const Var& a, const Var& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(op) + ": " + shape_str(a.value()) +
                         " vs " + shape_str(b.value()));
  }
}

}  // namespace

Var matmul(const Var& a, const Var& b) {
  Mat out = pancan::matmul(a.value(), b.value());
  return tape_of(a).record(std::move(out), {a, b}, [a, b](Tape& t, const Mat& g) {
    if (t.requires_grad(a)) t.accumulate(a, g * b.value().transpose());
    if (t.requires_grad(b)) t.accumulate(b, a.value().transpose() * g);
  });
}

Var add(const Var& a, const Var& b) {
  require_same_shape("add", a, b);
  return tape_of(a).record(a.value() + b.value(), {a, b},
                           [a, b](Tape& t, const Mat& g) {
                             t.accumulate(a, g);
                             t.accumulate(b, g);
                           });
}

Var sub(const Var& a, const Var& b) {
  require_same_shape("sub", a, b);
  return tape_of(a).record(a.value() - b.value(), {a, b},
                           [a, b](Tape& t, const Mat& g) {
                             t.accumulate(a, g);
                             t.accumulate(b, -g);
                           });
}

Var scale(const Var& a, double s) {
  return tape_of(a).record(a.value() * s, {a},
                           [a, s](Tape& t, const Mat& g) { t.accumulate(a, g * s); });
}

Var hadamard(const Var& a, const Var& b) {
  require_same_shape("hadamard", a, b);
  return tape_of(a).record(a.value().cwiseProduct(b.value()), {a, b},
                           [a, b](Tape& t, const Mat& g) {
                             t.accumulate(a, g.cwiseProduct(b.value()));
                             t.accumulate(b, g.cwiseProduct(a.value()));
                           });
}

Var transpose(const Var& a) {
  return tape_of(a).record(a.value().transpose(), {a}, [a](Tape& t, const Mat& g) {
    t.accumulate(a, g.transpose());
  });
}

Var relu(const Var& a) {
  return tape_of(a).record(pancan::relu(a.value()), {a}, [a](Tape& t, const Mat& g) {
    t.accumulate(a, (a.value().array() > 0.0).select(g, 0.0));
  });
}

Var softmax_rows(const Var& a) {
  Tape& tape = tape_of(a);
  const std::size_t self = tape.size();
  return tape.record(pancan::softmax_rows(a.value()), {a},
                     [a, self](Tape& t, const Mat& g) {
                       const Mat& p = t.value(self);
                       Mat dx(p.rows(), p.cols());
                       for (Index r = 0; r < p.rows(); ++r) {
                         const double dot = g.row(r).dot(p.row(r));
                         dx.row(r) = p.row(r).cwiseProduct((g.row(r).array() - dot).matrix());
                       }
                       t.accumulate(a, dx);
                     });
}

Var concat_rows(std::span<const Var> blocks) {
  if (blocks.empty()) throw DimensionError("concat_rows: no blocks");
  std::vector<Mat> values;
  values.reserve(blocks.size());
  for (const Var& b : blocks) values.push_back(b.value());
  Mat out = pancan::concat_rows(values);
  std::vector<Var> parts(blocks.begin(), blocks.end());
  return tape_of(blocks.front())
      .record(std::move(out), blocks, [parts](Tape& t, const Mat& g) {
        Index at = 0;
        for (const Var& p : parts) {
          t.accumulate(p, g.middleRows(at, p.rows()));
          at += p.rows();
        }
      });
}

Var concat_cols(std::span<const Var> blocks) {
  if (blocks.empty()) throw DimensionError("concat_cols: no blocks");
  const Index rows = blocks.front().rows();
  Index cols = 0;
  for (const Var& b : blocks) {
    if (b.rows() != rows) {
      throw DimensionError("concat_cols: row count " + std::to_string(b.rows()) +
                           " != " + std::to_string(rows));
    }
    cols += b.cols();
  }
  Mat out(rows, cols);
  Index at = 0;
  for (const Var& b : blocks) {
    out.middleCols(at, b.cols()) = b.value();
    at += b.cols();
  }
  std::vector<Var> parts(blocks.begin(), blocks.end());
  return tape_of(blocks.front())
      .record(std::move(out), blocks, [parts](Tape& t, const Mat& g) {
        Index at = 0;
        for (const Var& p : parts) {
          t.accumulate(p, g.middleCols(at, p.cols()));
          at += p.cols();
        }
      });
}

Var middle_rows(const Var& a, Index start, Index count) {
  if (start < 0 || count < 0 || start + count > a.rows()) {
    throw DimensionError("middle_rows: out of range");
  }
  return tape_of(a).record(a.value().middleRows(start, count), {a},
                           [a, start, count](Tape& t, const Mat& g) {
                             Mat full = Mat::Zero(a.rows(), a.cols());
                             full.middleRows(start, count) = g;
                             t.accumulate(a, full);
                           });
}

Var middle_cols(const Var& a, Index start, Index count) {
  if (start < 0 || count < 0 || start + count > a.cols()) {
    throw DimensionError("middle_cols: out of range");
  }
  return tape_of(a).record(a.value().middleCols(start, count), {a},
                           [a, start, count](Tape& t, const Mat& g) {
                             Mat full = Mat::Zero(a.rows(), a.cols());
                             full.middleCols(start, count) = g;
                             t.accumulate(a, full);
                           });
}

Var add_bias(const Var& x, const Var& b) {
  if (b.cols() != 1 || b.rows() != x.rows()) {
    throw DimensionError("add_bias: bias " + shape_str(b.value()) + " for " +
                         shape_str(x.value()));
  }
  Mat out = x.value();
  out.colwise() += b.value().col(0);
  return tape_of(x).record(std::move(out), {x, b}, [x, b](Tape& t, const Mat& g) {
    t.accumulate(x, g);
    t.accumulate(b, g.rowwise().sum());
  });
}

Var col_sum(const Var& a) {
  return tape_of(a).record(a.value().rowwise().sum(), {a},
                           [a](Tape& t, const Mat& g) {
                             t.accumulate(a, g.col(0).replicate(1, a.cols()));
                           });
}

Var col_mean(const Var& a) {
  if (a.cols() == 0) throw DimensionError("col_mean: no columns");
  const double inv = 1.0 / static_cast<double>(a.cols());
  return tape_of(a).record(a.value().rowwise().sum() * inv, {a},
                           [a, inv](Tape& t, const Mat& g) {
                             t.accumulate(a, g.col(0).replicate(1, a.cols()) * inv);
                           });
}

Var gather_cols(const Var& a, std::span<const Index> cols) {
  std::vector<Index> idx(cols.begin(), cols.end());
  Mat out(a.rows(), static_cast<Index>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j) {
    if (idx[j] < 0 || idx[j] >= a.cols()) {
      throw DimensionError("gather_cols: index out of range");
    }
    out.col(static_cast<Index>(j)) = a.value().col(idx[j]);
  }
  return tape_of(a).record(std::move(out), {a}, [a, idx](Tape& t, const Mat& g) {
    Mat full = Mat::Zero(a.rows(), a.cols());
    for (std::size_t j = 0; j < idx.size(); ++j) {
      full.col(idx[j]) += g.col(static_cast<Index>(j));
    }
    t.accumulate(a, full);
  });
}

Var sum(const Var& a) {
  return tape_of(a).record(Mat::Constant(1, 1, a.value().sum()), {a},
                           [a](Tape& t, const Mat& g) {
                             t.accumulate(a, Mat::Constant(a.rows(), a.cols(), g(0, 0)));
                           });
}

Var squared_norm(const Var& a) {
  return tape_of(a).record(Mat::Constant(1, 1, a.value().squaredNorm()), {a},
                           [a](Tape& t, const Mat& g) {
                             t.accumulate(a, 2.0 * g(0, 0) * a.value());
                           });
}

Var l2_col_norms(const Var& a) {
  Tape& tape = tape_of(a);
  const std::size_t self = tape.size();
  return tape.record(pancan::l2_col_norms(a.value()), {a},
                     [a, self](Tape& t, const Mat& g) {
                       const Mat& norms = t.value(self);
                       Mat dx = Mat::Zero(a.rows(), a.cols());
                       for (Index j = 0; j < a.cols(); ++j) {
                         const double n = norms(j, 0);
                         if (n > 0.0) dx.col(j) = a.value().col(j) * (g(j, 0) / n);
                       }
                       t.accumulate(a, dx);
                     });
}

Var bce_with_logits(const Var& logits, const Mat& targets, const Mat& weights) {
  const Mat& z = logits.value();
  if (targets.rows() != z.rows() || targets.cols() != z.cols() ||
      weights.rows() != z.rows() || weights.cols() != z.cols()) {
    throw DimensionError("bce_with_logits: shape mismatch");
  }
  double total = 0.0;
  for (Index j = 0; j < z.cols(); ++j) {
    for (Index i = 0; i < z.rows(); ++i) {
      const double x = z(i, j);
      // softplus(x) = max(x, 0) + log1p(exp(-|x|))
      const double softplus = std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
      total += weights(i, j) * (softplus - targets(i, j) * x);
    }
  }
  return tape_of(logits).record(
      Mat::Constant(1, 1, total), {logits},
      [logits, targets, weights](Tape& t, const Mat& g) {
        const Mat& z = logits.value();
        Mat dz(z.rows(), z.cols());
        for (Index j = 0; j < z.cols(); ++j) {
          for (Index i = 0; i < z.rows(); ++i) {
            const double sig = 1.0 / (1.0 + std::exp(-z(i, j)));
            dz(i, j) = g(0, 0) * weights(i, j) * (sig - targets(i, j));
          }
        }
        t.accumulate(logits, dz);
      });
}

}  // namespace ad
}  // namespace pancan
