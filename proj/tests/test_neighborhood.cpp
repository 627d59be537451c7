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

#include <queue>
#include <random>
#include <set>

#include "doctest.h"
#include "pancan/grad_check.hpp"
#include "pancan/neighborhood.hpp"

using namespace pancan;

namespace {

// Grid distance by breadth-first search over 4-connected cells.
std::vector<int> bfs(const GridSpec& g, int start) {
  std::vector<int> dist(static_cast<std::size_t>(g.cells()), -1);
  std::queue<int> q;
  dist[static_cast<std::size_t>(start)] = 0;
  q.push(start);
  while (!q.empty()) {
    const int c = q.front();
    q.pop();
    const int r = g.row_of(c), k = g.col_of(c);
    const int dr[4] = {-1, 1, 0, 0}, dk[4] = {0, 0, -1, 1};
    for (int i = 0; i < 4; ++i) {
      const int nr = r + dr[i], nk = k + dk[i];
      if (nr < 0 || nr >= g.n_rows || nk < 0 || nk >= g.n_cols) continue;
      const int n = g.index(nr, nk);
      if (dist[static_cast<std::size_t>(n)] < 0) {
        dist[static_cast<std::size_t>(n)] = dist[static_cast<std::size_t>(c)] + 1;
        q.push(n);
      }
    }
  }
  return dist;
}

}  // namespace

TEST_CASE("directional adjacency points at the neighbor in that direction") {
  const GridSpec g{3, 4, 3, 4};
  const Mask up = directional_adjacency(g, Direction::kUp);
  const Mask right = directional_adjacency(g, Direction::kRight);
  CHECK(up(g.index(1, 2), g.index(0, 2)));
  CHECK(up.row(g.index(0, 2)).count() == 0);
  CHECK(right(g.index(2, 0), g.index(2, 1)));
  CHECK(right.row(g.index(2, 3)).count() == 0);
  CHECK(up.count() == 8);     // (rows - 1) * cols
  CHECK(right.count() == 9);  // rows * (cols - 1)
  const AdjacencySet set = directional_set(g);
  CHECK(set.count() == 4);
  const Mask merged = merged_set(set).masks.front();
  CHECK(merged == merged.transpose());
  CHECK_THROWS_AS(directional_set(g, 5), ConfigError);
}

TEST_CASE("the union of order-k rings is the grid-distance-k ring") {
  for (const GridSpec g : {GridSpec{8, 10, 8, 10}, GridSpec{4, 5, 4, 5}, GridSpec{1, 6, 1, 6}}) {
    const auto rings = multi_order(directional_set(g), 3);
    REQUIRE(rings.size() == 3);
    for (int cell = 0; cell < g.cells(); ++cell) {
      const auto dist = bfs(g, cell);
      for (int k = 1; k <= 3; ++k) {
        std::set<int> expected;
        for (int j = 0; j < g.cells(); ++j) {
          if (dist[static_cast<std::size_t>(j)] == k) expected.insert(j);
        }
        const auto merged = rings[static_cast<std::size_t>(k - 1)].merged(cell);
        CHECK(std::set<int>(merged.begin(), merged.end()) == expected);
      }
    }
  }
}

TEST_CASE("rings exclude the center and stay within their direction's reach") {
  const GridSpec g{5, 5, 5, 5};
  const OrderNeighborhood two = order_k(directional_set(g), 2);
  const int center = g.index(2, 2);
  // Order two, direction up: straight two up plus the diagonals one up.
  const auto& up = two.of(static_cast<int>(Direction::kUp), center);
  CHECK(std::set<int>(up.begin(), up.end()) ==
        std::set<int>{g.index(0, 2), g.index(1, 1), g.index(1, 3)});
  for (int c = 0; c < 4; ++c) {
    for (int m : two.of(c, center)) CHECK(m != center);
  }
  CHECK_THROWS_AS(order_k(directional_set(g), 0), std::invalid_argument);
}

TEST_CASE("learnable adjacency rows normalize over their support") {
  const GridSpec g{2, 3, 2, 3};
  const LearnableAdjacency la = LearnableAdjacency::from_mask(directional_adjacency(g, Direction::kRight));
  CHECK(la.num_weights() == 4);
  Mat w(1, 4);
  w << 0.3, -1.0, 2.0, 0.0;
  const Mat p = normalize_rows(la, w);
  for (Index r = 0; r < p.rows(); ++r) {
    const double s = p.row(r).sum();
    CHECK((s == doctest::Approx(1.0) || s == 0.0));
  }
  CHECK(p.row(g.index(0, 2)).isZero());  // no right neighbor
  for (Index i = 0; i < p.rows(); ++i) {
    for (Index j = 0; j < p.cols(); ++j) {
      if (!la.support(i, j)) CHECK(p(i, j) == 0.0);
    }
  }
  // Two entries in a row: softmax of their weights.
  Mask two = Mask::Constant(1, 2, true);
  const LearnableAdjacency la2 = LearnableAdjacency::from_mask(two);
  Mat w2(1, 2);
  w2 << 1.0, 0.0;
  CHECK(normalize_rows(la2, w2)(0, 0) == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))));
}

TEST_CASE("differentiable row normalization matches and has exact gradients") {
  const GridSpec g{3, 3, 3, 3};
  Mask m = merged_set(directional_set(g)).masks.front();
  const LearnableAdjacency la = LearnableAdjacency::from_mask(m);
  std::mt19937_64 rng(9);
  std::normal_distribution<double> d(0.0, 1.0);
  Mat w(1, la.num_weights());
  for (Index i = 0; i < w.size(); ++i) w(0, i) = d(rng);
  Tape t;
  CHECK(normalize_rows(la, t.constant(w)).value().isApprox(normalize_rows(la, w), 1e-14));
  Mat probe(9, 9);
  for (Index i = 0; i < probe.size(); ++i) probe.data()[i] = d(rng);
  const GradCheckReport r = grad_check(
      [&](Tape& tape, std::span<const Var> v) {
        return ad::sum(ad::hadamard(tape.constant(probe), normalize_rows(la, v[0])));
      },
      {w});
  CHECK(r.max_rel_error < 1e-6);
}

TEST_CASE("adjacency fixtures") {
  for (int c = 0; c < 4; ++c) CHECK(directional_adjacency(GridSpec{1, 1, 1, 1}, static_cast<Direction>(c)).count() == 0);
  const GridSpec g3{3, 3, 3, 3};
  const Mask right = directional_adjacency(g3, Direction::kRight);
  CHECK(right.row(4).count() == 1);
  CHECK(right(4, g3.index(1, 2)));
  const AdjacencySet big = directional_set(GridSpec{8, 10, 8, 10});
  Index edges = 0;
  for (const Mask& m : big.masks) edges += m.count();
  CHECK(edges == 284);
  const OrderNeighborhood first = order_k(directional_set(g3), 1);
  CHECK(first.of(static_cast<int>(Direction::kUp), 4) == std::vector<int>{1});
}

TEST_CASE("row normalization fixtures") {
  Mask m = Mask::Constant(2, 3, false);
  m(0, 1) = true;
  m(1, 0) = m(1, 1) = m(1, 2) = true;
  const LearnableAdjacency la = LearnableAdjacency::from_mask(m);
  const Mat p = normalize_rows(la, Mat::Constant(1, 4, 0.7));
  CHECK(p(0, 1) == 1.0);
  for (int j = 0; j < 3; ++j) CHECK(p(1, j) == doctest::Approx(1.0 / 3.0));
  std::mt19937_64 rng(2);
  std::normal_distribution<double> d(0.0, 2.0);
  Mat w(1, 4);
  for (Index i = 0; i < 4; ++i) w(0, i) = d(rng);
  const Mat q = normalize_rows(la, w);
  const double z = std::exp(w(0, 1)) + std::exp(w(0, 2)) + std::exp(w(0, 3));
  for (int j = 0; j < 3; ++j) CHECK(q(1, j) == doctest::Approx(std::exp(w(0, j + 1)) / z).epsilon(1e-12));
}
