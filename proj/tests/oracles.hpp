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

#include <algorithm>
#include <memory>
#include <numeric>
#include <utility>
#include <vector>

#include "pancan/metrics.hpp"
#include "pancan/mocamn.hpp"

namespace pancan::testing {

// Brute-force tabulation: AP from a descending sort with tie blocks,
// decisions from explicit per-sample rank counts.
struct Oracle {
  std::vector<double> ap;
  double mAP = 0.0;
  PrfScores all, top;
};

inline double sorted_ap(const Vec& s, const Vec& y) {
  std::vector<int> order(static_cast<std::size_t>(s.size()));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return s(a) > s(b); });
  double sum = 0.0;
  int pos = 0;
  for (Index i = 0; i < s.size(); ++i) {
    if (y(i) < 0) continue;
    ++pos;
    // End of i's tie block in the sorted order.
    std::size_t end = 0;
    while (end < order.size() && s(order[end]) >= s(i)) ++end;
    int hits = 0;
    for (std::size_t r = 0; r < end; ++r) hits += y(order[r]) > 0 ? 1 : 0;
    sum += static_cast<double>(hits) / static_cast<double>(end);
  }
  return sum / pos;
}

inline PrfScores tabulate(const std::vector<std::vector<bool>>& pred, const Mat& y) {
  PrfScores p;
  double tp = 0, np = 0, ny = 0;
  const double L = static_cast<double>(y.cols());
  for (Index c = 0; c < y.cols(); ++c) {
    double t = 0, a = 0, b = 0;
    for (Index i = 0; i < y.rows(); ++i) {
      const bool hit = pred[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)];
      a += hit;
      b += y(i, c) > 0;
      t += hit && y(i, c) > 0;
    }
    p.CP += a > 0 ? t / a : 0.0;
    p.CR += b > 0 ? t / b : 0.0;
    tp += t;
    np += a;
    ny += b;
  }
  p.CP = 100.0 * p.CP / L;
  p.CR = 100.0 * p.CR / L;
  p.CF1 = p.CP + p.CR > 0 ? 2 * p.CP * p.CR / (p.CP + p.CR) : 0.0;
  p.OP = np > 0 ? 100.0 * (tp / np) : 0.0;
  p.OR = ny > 0 ? 100.0 * (tp / ny) : 0.0;
  p.OF1 = p.OP + p.OR > 0 ? 2 * p.OP * p.OR / (p.OP + p.OR) : 0.0;
  return p;
}

inline Oracle oracle(const Mat& s, const Mat& y, int k) {
  Oracle o;
  double sum = 0.0;
  for (Index c = 0; c < s.cols(); ++c) {
    o.ap.push_back(sorted_ap(s.col(c), y.col(c)));
    sum += o.ap.back();
  }
  o.mAP = 100.0 * sum / static_cast<double>(s.cols());
  std::vector<std::vector<bool>> all(static_cast<std::size_t>(s.rows())), top = all;
  for (Index i = 0; i < s.rows(); ++i) {
    for (Index c = 0; c < s.cols(); ++c) {
      int ahead = 0;
      for (Index d = 0; d < s.cols(); ++d) ahead += (s(i, d) > s(i, c) || (s(i, d) == s(i, c) && d < c));
      const bool over = s(i, c) >= 0.5;
      all[static_cast<std::size_t>(i)].push_back(over);
      top[static_cast<std::size_t>(i)].push_back(over && ahead < k);
    }
  }
  o.all = tabulate(all, y);
  o.top = tabulate(top, y);
  return o;
}

// Relabels cells: old cell i becomes perm[i] everywhere in the structure.
inline MocamnStructure permute(const MocamnStructure& s, const std::vector<int>& perm) {
  MocamnStructure out = s;
  for (std::size_t k = 0; k < s.rings.size(); ++k) {
    for (std::size_t c = 0; c < s.rings[k].size(); ++c) {
      MemberLists lists(perm.size());
      const MemberLists& old = *s.rings[k][c];
      for (std::size_t i = 0; i < old.size(); ++i) {
        auto& l = lists[static_cast<std::size_t>(perm[i])];
        for (int j : old[i]) l.push_back(perm[static_cast<std::size_t>(j)]);
        std::sort(l.begin(), l.end());
      }
      out.rings[k][c] = std::make_shared<const MemberLists>(std::move(lists));
    }
  }
  for (std::size_t c = 0; c < s.adjacency.size(); ++c) {
    const Mask& m = s.adjacency[c].support;
    Mask pm = Mask::Constant(m.rows(), m.cols(), false);
    for (Index i = 0; i < m.rows(); ++i) {
      for (Index j = 0; j < m.cols(); ++j) pm(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]) = m(i, j);
    }
    out.adjacency[c] = LearnableAdjacency::from_mask(pm);
  }
  return out;
}

inline Mat permute_adjacency_weights(const LearnableAdjacency& from, const LearnableAdjacency& to,
                              const Mat& w, const std::vector<int>& perm) {
  Mat out(1, w.cols());
  for (std::size_t e = 0; e < from.entries.size(); ++e) {
    const auto [i, j] = from.entries[e];
    const std::pair<int, int> target{perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]};
    const auto it = std::find(to.entries.begin(), to.entries.end(), target);
    out(0, it - to.entries.begin()) = w(0, static_cast<Index>(e));
  }
  return out;
}

inline Mat permute_cols(const Mat& x, const std::vector<int>& perm) {
  Mat out(x.rows(), x.cols());
  for (Index i = 0; i < x.cols(); ++i) out.col(perm[static_cast<std::size_t>(i)]) = x.col(i);
  return out;
}

}  // namespace pancan::testing
