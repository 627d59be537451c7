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

#include "pancan/attention.hpp"

#include <algorithm>
#include <cmath>

namespace pancan {

double attn_score(const Vec& center, const Vec& member, const Mat& w_query,
                  const Mat& w_member) {
  if (w_query.cols() != center.size() || w_member.cols() != member.size() ||
      w_query.rows() != w_member.rows()) {
    throw DimensionError("attn_score: projection shapes do not match features");
  }
  const Vec q = w_query * center;
  const Vec m = w_member * member;
  return q.dot(m) / std::sqrt(static_cast<double>(center.size()));
}

Vec transition_probs(const Vec& center, const Mat& members, const Mat& w_query,
                     const Mat& w_member) {
  if (members.cols() == 0) return Vec();
  Mat scores(1, members.cols());
  for (Index j = 0; j < members.cols(); ++j) {
    scores(0, j) = attn_score(center, members.col(j), w_query, w_member);
  }
  return softmax_rows(scores).row(0).transpose();
}

WalkSelection select_walk(const Vec& probs, double tau, ThresholdMode mode) {
  if (tau < 0.0 || tau > 1.0) {
    throw ConfigError("select_walk: tau must lie in [0, 1], got " + std::to_string(tau));
  }
  WalkSelection out;
  if (probs.size() == 0) return out;
  Index best = 0;
  const double peak = probs.maxCoeff(&best);
  double total = 0.0;
  for (Index m = 0; m < probs.size(); ++m) {
    const bool keep = (m == best) || (mode == ThresholdMode::kMaxRatio
                                          ? probs(m) / peak >= tau
                                          : probs(m) >= tau);
    if (keep) {
      out.kept.push_back(static_cast<int>(m));
      total += probs(m);
    }
  }
  out.probs.resize(static_cast<Index>(out.kept.size()));
  for (std::size_t j = 0; j < out.kept.size(); ++j) {
    out.probs(static_cast<Index>(j)) = probs(out.kept[j]) / total;
  }
  return out;
}

Vec order_context(const Mat& members, const WalkSelection& walk, const Mat& w_value) {
  Vec out = Vec::Zero(w_value.rows());
  for (std::size_t j = 0; j < walk.kept.size(); ++j) {
    out += walk.probs(static_cast<Index>(j)) * (w_value * members.col(walk.kept[j]));
  }
  return out;
}

namespace {

// Kept member columns and renormalized weights of one forward pass.
struct WalkTable {
  std::vector<std::vector<int>> cols;
  std::vector<std::vector<double>> weights;
};

}  // namespace

Var attend(const Var& queries, const Var& keys, const Var& values,
           std::span<const int> query_cols, std::shared_ptr<const MemberLists> members,
           double score_scale, const WalkRule& rule, AttentionRecord* record) {
  const Mat& Q = queries.value();
  const Mat& K = keys.value();
  const Mat& V = values.value();
  const std::size_t outputs = query_cols.size();
  if (members->size() != outputs) {
    throw DimensionError("attend: " + std::to_string(members->size()) +
                         " member lists for " + std::to_string(outputs) + " outputs");
  }
  if (Q.rows() != K.rows() || K.cols() != V.cols()) {
    throw DimensionError("attend: queries " + shape_str(Q) + ", keys " + shape_str(K) +
                         ", values " + shape_str(V));
  }

  auto table = std::make_shared<WalkTable>();
  table->cols.resize(outputs);
  table->weights.resize(outputs);
  Mat out = Mat::Zero(V.rows(), static_cast<Index>(outputs));
  Vec probs;
  for (std::size_t o = 0; o < outputs; ++o) {
    const std::vector<int>& cand = (*members)[o];
    if (cand.empty()) continue;
    const auto m = static_cast<Index>(cand.size());
    std::vector<int>& kept_cols = table->cols[o];
    std::vector<double>& kept_w = table->weights[o];
    if (rule.mode == WalkMode::kUniform) {
      kept_cols = cand;
      kept_w.assign(cand.size(), 1.0 / static_cast<double>(m));
    } else {
      Mat scores(1, m);
      const auto q = Q.col(query_cols[o]);
      for (Index j = 0; j < m; ++j) scores(0, j) = score_scale * q.dot(K.col(cand[j]));
      probs = softmax_rows(scores).row(0).transpose();
      const WalkSelection walk = select_walk(probs, rule.tau, rule.threshold);
      for (std::size_t j = 0; j < walk.kept.size(); ++j) {
        kept_cols.push_back(cand[walk.kept[j]]);
        kept_w.push_back(walk.probs(static_cast<Index>(j)));
      }
    }
    auto col = out.col(static_cast<Index>(o));
    for (std::size_t j = 0; j < kept_cols.size(); ++j) col += kept_w[j] * V.col(kept_cols[j]);
  }
  if (record != nullptr) {
    record->members = table->cols;
    record->weights = table->weights;
  }

  std::vector<int> qcols(query_cols.begin(), query_cols.end());
  const bool uniform = rule.mode == WalkMode::kUniform;
  Tape& tape = *queries.tape();
  return tape.record(
      std::move(out), {queries, keys, values},
      [queries, keys, values, qcols, table, score_scale, uniform](Tape& t, const Mat& g) {
        const Mat& Q = queries.value();
        const Mat& K = keys.value();
        const Mat& V = values.value();
        Mat dQ = Mat::Zero(Q.rows(), Q.cols());
        Mat dK = Mat::Zero(K.rows(), K.cols());
        Mat dV = Mat::Zero(V.rows(), V.cols());
        std::vector<double> dp;
        for (std::size_t o = 0; o < qcols.size(); ++o) {
          const auto& cols = table->cols[o];
          const auto& w = table->weights[o];
          if (cols.empty()) continue;
          const auto go = g.col(static_cast<Index>(o));
          dp.resize(cols.size());
          double mean = 0.0;
          for (std::size_t j = 0; j < cols.size(); ++j) {
            dV.col(cols[j]) += w[j] * go;
            dp[j] = go.dot(V.col(cols[j]));
            mean += w[j] * dp[j];
          }
          if (uniform) continue;
          const Index q = qcols[o];
          for (std::size_t j = 0; j < cols.size(); ++j) {
            const double ds = score_scale * w[j] * (dp[j] - mean);
            dQ.col(q) += ds * K.col(cols[j]);
            dK.col(cols[j]) += ds * Q.col(q);
          }
        }
        t.accumulate(queries, dQ);
        t.accumulate(keys, dK);
        t.accumulate(values, dV);
      });
}

}  // namespace pancan
