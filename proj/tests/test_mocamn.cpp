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

#include <algorithm>
#include <numeric>
#include <random>

#include "doctest.h"
#include "pancan/grad_check.hpp"
#include "pancan/mocamn.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace pancan;
using pancan::testing::max_abs_diff;
using pancan::testing::random_mat;
using pancan::testing::permute;
using pancan::testing::permute_adjacency_weights;
using pancan::testing::permute_cols;

namespace {

MocamnLayerSpec layer_spec(Index d, double gamma, double tau = 0.5) {
  MocamnLayerSpec spec;
  spec.in_dim = d;
  spec.base_dim = d;
  spec.out_dim = 6;
  spec.attn_dim = 3;
  spec.orders = {1, 2};
  spec.gamma = gamma;
  spec.walk = WalkRule{WalkMode::kAttention, tau};
  return spec;
}

MocamnLayerWeights<Mat> random_weights(const MocamnLayerSpec& spec, const MocamnStructure& s,
                                       std::mt19937_64& rng) {
  MocamnLayerWeights<Mat> w = init_mocamn_layer(spec, s, rng);
  for (Mat& a : w.adjacency) a = random_mat(1, a.cols(), rng);
  w.bias = random_mat(w.bias.rows(), 1, rng, 0.1);
  return w;
}

Mat run_layer(const Mat& x, const MocamnLayerWeights<Mat>& w, const MocamnLayerSpec& spec,
              const MocamnStructure& s, LayerTrace* trace = nullptr) {
  Tape t;
  const Var h = t.constant(x);
  return mocamn_layer(h, h, bind(t, w, false), spec, s, trace).value();
}

}  // namespace

TEST_CASE("structure: rings, adjacency support with self loops") {
  const GridSpec g{4, 5, 4, 5};
  const MocamnStructure s = build_mocamn_structure(g, 4, 2);
  CHECK(s.max_order() == 2);
  CHECK(s.adjacency.size() == 4);
  for (const LearnableAdjacency& la : s.adjacency) CHECK(la.support.diagonal().all());
  // Right support: the cell itself and its right neighbor.
  CHECK(s.adjacency[3].support.row(g.index(1, 1)).count() == 2);
  CHECK(s.adjacency[3].support(g.index(1, 1), g.index(1, 2)));
}

TEST_CASE("gamma zero removes every context block") {
  std::mt19937_64 rng(1);
  const MocamnStructure s = build_mocamn_structure(GridSpec{4, 4, 4, 4}, 4, 2);
  const MocamnLayerSpec spec = layer_spec(5, 0.0);
  const MocamnLayerWeights<Mat> w = random_weights(spec, s, rng);
  const Mat x = random_mat(5, 16, rng);
  const Mat expected =
      ((w.projection.leftCols(5) * x).colwise() + w.bias.col(0)).cwiseMax(0.0);
  CHECK(max_abs_diff(run_layer(x, w, spec, s), expected) <= 1e-14);
}

TEST_CASE("normalized adjacency rows sum to one") {
  std::mt19937_64 rng(2);
  const MocamnStructure s = build_mocamn_structure(GridSpec{3, 4, 3, 4}, 4, 2);
  const MocamnLayerSpec spec = layer_spec(4, 0.225);
  LayerTrace trace;
  run_layer(random_mat(4, 12, rng), random_weights(spec, s, rng), spec, s, &trace);
  REQUIRE(trace.adjacency.size() == 4);
  for (const Mat& p : trace.adjacency) {
    CHECK(max_abs_diff(p.rowwise().sum(), Mat::Ones(12, 1)) <= 1e-12);
  }
  CHECK(trace.rings.size() == 2);
}

TEST_CASE("layer is equivariant under cell permutations") {
  std::mt19937_64 rng(3);
  const GridSpec g{4, 5, 4, 5};
  const MocamnStructure s = build_mocamn_structure(g, 4, 2);
  const MocamnLayerSpec spec = layer_spec(5, 0.225);
  const MocamnLayerWeights<Mat> w = random_weights(spec, s, rng);
  const Mat x = random_mat(5, g.cells(), rng);
  const Mat y = run_layer(x, w, spec, s);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> perm(static_cast<std::size_t>(g.cells()));
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    const MocamnStructure ps = permute(s, perm);
    MocamnLayerWeights<Mat> pw = w;
    for (std::size_t c = 0; c < w.adjacency.size(); ++c) {
      pw.adjacency[c] = permute_adjacency_weights(s.adjacency[c], ps.adjacency[c], w.adjacency[c], perm);
    }
    const Mat py = run_layer(permute_cols(x, perm), pw, spec, ps);
    CHECK(max_abs_diff(py, permute_cols(y, perm)) <= 1e-12);
  }
}

TEST_CASE("stack re-injects the input and matches the plain overload") {
  std::mt19937_64 rng(4);
  const GridSpec g{4, 4, 4, 4};
  const MocamnStructure s = build_mocamn_structure(g, 4, 2);
  MocamnLayerSpec first = layer_spec(5, 0.225);
  MocamnLayerSpec second = first;
  second.in_dim = first.out_dim;
  const std::vector<MocamnLayerSpec> specs{first, second};
  const std::vector<MocamnLayerWeights<Mat>> ws{random_weights(first, s, rng),
                                                random_weights(second, s, rng)};
  const Mat x = random_mat(5, 16, rng);
  Tape t;
  const Var in = t.constant(x);
  std::vector<MocamnLayerWeights<Var>> vs{bind(t, ws[0], false), bind(t, ws[1], false)};
  const Mat stacked = mocamn_stack(in, vs, specs, s).value();
  const CellFeatures cf{0, g, x};
  const CellFeatures h1 = mocamn_layer(cf, cf, ws[0], first, s);
  const CellFeatures h2 = mocamn_layer(h1, cf, ws[1], second, s);
  CHECK(max_abs_diff(stacked, h2.feats) == 0.0);
  CHECK_THROWS_AS(mocamn_layer(CellFeatures{0, GridSpec{2, 8, 2, 8}, x}, cf, ws[0], first, s),
                  ConfigError);
}

TEST_CASE("layer gradients match central differences for every tensor") {
  std::mt19937_64 rng(6);
  const GridSpec g{3, 3, 3, 3};
  const MocamnStructure s = build_mocamn_structure(g, 4, 2);
  const MocamnLayerSpec spec = layer_spec(4, 0.225, 0.3);
  const MocamnLayerWeights<Mat> w = random_weights(spec, s, rng);
  const Mat x = random_mat(4, 9, rng);
  const Mat probe = random_mat(spec.out_dim, 9, rng);
  std::vector<Mat> flat;
  visit_layer(w, "layer", [&](const std::string&, const Mat& m) { flat.push_back(m); });
  flat.push_back(x);
  const GradCheckReport r = grad_check(
      [&](Tape& t, std::span<const Var> p) {
        MocamnLayerWeights<Var> vw = map<Var>(w, [&](const Mat&) { return Var(); });
        std::size_t i = 0;
        visit_layer(vw, "layer", [&](const std::string&, Var& v) { v = p[i++]; });
        const Var h = p[i];
        return ad::sum(ad::hadamard(t.constant(probe), mocamn_layer(h, h, vw, spec, s)));
      },
      flat);
  CHECK(r.entries_checked > 100);
  CHECK(r.max_rel_error < 1e-5);
}

TEST_CASE("a single cell sees only zero contexts") {
  std::mt19937_64 rng(7);
  const MocamnStructure s = build_mocamn_structure(GridSpec{1, 1, 1, 1}, 4, 1);
  MocamnLayerSpec spec = layer_spec(4, 0.225);
  spec.orders = {1};
  const MocamnLayerWeights<Mat> w = random_weights(spec, s, rng);
  const Mat x = random_mat(4, 1, rng);
  Mat stacked = Mat::Zero(w.projection.cols(), 1);
  stacked.topRows(4) = x;
  const Mat expected = (w.projection * stacked + w.bias).cwiseMax(0.0);
  CHECK(max_abs_diff(run_layer(x, w, spec, s), expected) <= 1e-14);
}

TEST_CASE("scripted 3x3 layer with orders one and two") {
  // Straight-line recomputation from ring lists, softmax, threshold and P.
  std::mt19937_64 rng(8);
  const GridSpec g{3, 3, 3, 3};
  const MocamnStructure s = build_mocamn_structure(g, 4, 2);
  const MocamnLayerSpec spec = layer_spec(2, 0.2, 0.6);
  const MocamnLayerWeights<Mat> w = random_weights(spec, s, rng);
  const Mat x = random_mat(2, 9, rng);
  const Mat out = run_layer(x, w, spec, s);
  const double scale = 1.0 / std::sqrt(2.0);
  Mat stacked(w.projection.cols(), 9);
  stacked.topRows(2) = x;
  Index row = 2;
  for (int c = 0; c < 4; ++c) {
    Mat ctx(6, 9);
    for (int oi = 0; oi < 2; ++oi) {
      const auto& ow = w.orders[static_cast<std::size_t>(oi)];
      const MemberLists& rings = *s.rings[static_cast<std::size_t>(oi)][static_cast<std::size_t>(c)];
      for (int i = 0; i < 9; ++i) {
        const auto& mem = rings[static_cast<std::size_t>(i)];
        Vec v = Vec::Zero(3);
        if (!mem.empty()) {
          std::vector<double> e;
          double peak = -1e300;
          for (int m : mem) {
            e.push_back(scale * (ow.query * x.col(i)).dot(ow.member * x.col(m)));
            peak = std::max(peak, e.back());
          }
          double z = 0.0;
          for (double& a : e) z += (a = std::exp(a - peak));
          const double top = 1.0 / z;  // largest probability
          double kept = 0.0;
          for (double a : e) kept += (a / z >= 0.6 * top) ? a / z : 0.0;
          for (std::size_t j = 0; j < mem.size(); ++j) {
            if (e[j] / z >= 0.6 * top) v += (e[j] / z / kept) * (ow.value * x.col(mem[j]));
          }
        }
        ctx.block(3 * oi, i, 3, 1) = v;
      }
    }
    const Mat P = normalize_rows(s.adjacency[static_cast<std::size_t>(c)], w.adjacency[static_cast<std::size_t>(c)]);
    stacked.middleRows(row, 6) = std::sqrt(0.2) * ctx * P.transpose();
    row += 6;
  }
  const Mat expected = ((w.projection * stacked).colwise() + w.bias.col(0)).cwiseMax(0.0);
  CHECK(max_abs_diff(out, expected) <= 1e-12);
  CHECK(out.rows() == spec.out_dim);
}
