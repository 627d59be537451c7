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

#include <cmath>
#include <random>

#include "doctest.h"
#include "pancan/model.hpp"
#include "test_util.hpp"

using namespace pancan;
using pancan::testing::max_abs_diff;
using pancan::testing::random_mat;

namespace {

ModelConfig base_config() {
  ModelConfig c;
  c.grid_rows = 4;
  c.grid_cols = 4;
  c.in_dim = 3;
  c.num_labels = 4;
  c.hidden_dim = 6;
  c.attn_dim = 3;
  c.fusion_dim = 4;
  c.heads = 2;
  c.depth = {1};
  return c;
}

}  // namespace

TEST_CASE("resolve fills defaults and rejects bad configurations") {
  const ModelConfig r = resolve(base_config());
  CHECK(r.num_scales == 3);
  CHECK(r.orders == std::vector<std::vector<int>>{{1, 2}, {1}, {1}});
  CHECK(r.depth == std::vector<int>{1, 1, 1});
  CHECK(r.gamma == doctest::Approx(0.225));
  CHECK(r.groups == std::vector<std::vector<int>>{{0, 1, 2, 3}});
  CHECK(r.group_weights == std::vector<double>{1.0});

  ModelConfig c = base_config();
  c.multi_order = false;
  CHECK(resolve(c).gamma == 0.0);
  c = base_config();
  c.cross_scale = false;
  CHECK(resolve(c).num_scales == 1);
  c = base_config();
  c.heads = 3;
  CHECK_THROWS_AS(resolve(c), ConfigError);
  c = base_config();
  c.groups = {{0, 1}, {1, 2, 3}};
  CHECK_THROWS_AS(resolve(c), ConfigError);
  c = base_config();
  c.num_scales = 5;
  CHECK_THROWS_AS(resolve(c), ConfigError);
  c = base_config();
  c.tau = 1.2;
  CHECK_THROWS_AS(resolve(c), ConfigError);
}

TEST_CASE("zero input and zero biases give zero logits") {
  const PanCAN model(base_config());
  PanCANParams p = model.init_params(3);
  visit(p, [](const std::string& name, Mat& m) {
    if (name.ends_with("bias")) m.setZero();
  });
  const Prediction pred = model.predict(Mat::Zero(3, 16), p);
  CHECK(pred.logits.isZero());
  CHECK(max_abs_diff(pred.probs, Vec::Constant(4, 0.5)) == 0.0);
}

TEST_CASE("uninformative logits cost ln 2 per label plus the weight penalty") {
  ModelConfig c = base_config();
  c.variant = ModelVariant::kContextFree;
  c.groups = {{0, 3}, {1, 2}};
  c.group_weights = {2.0, 0.5};
  const PanCAN model(c);
  PanCANParams p = model.init_params(4);
  p.fusion.global_proj.setZero();
  std::vector<Prediction> preds;
  std::mt19937_64 rng(1);
  for (int b = 0; b < 3; ++b) preds.push_back(model.predict(random_mat(3, 16, rng), p));
  Mat labels(3, 4);
  labels << 1, -1, -1, 1, -1, -1, 1, 1, 1, 1, -1, -1;
  double penalty = 0.0;
  for (const auto& h : p.heads) penalty += 0.5 * h.weight.squaredNorm();
  const double expected = 3 * (2 * 2.0 + 2 * 0.5) * std::log(2.0) + penalty;
  CHECK(grouped_loss(preds, labels, model.config(), p) == doctest::Approx(expected).epsilon(1e-12));
  Mat bad = labels;
  bad(0, 0) = 0.0;
  CHECK_THROWS_AS(grouped_loss(preds, bad, model.config(), p), InputError);
}

TEST_CASE("a dropped scale token matches the model without that scale") {
  const PanCAN big(base_config());
  ModelConfig sc = base_config();
  sc.num_scales = 2;
  const PanCAN small(sc);
  const PanCANParams pb = big.init_params(9);
  PanCANParams ps = small.init_params(0);
  ps.mocamn = {pb.mocamn[0], pb.mocamn[1]};
  ps.cscamn = {pb.cscamn[0]};
  ps.fusion = pb.fusion;
  ps.fusion.token_proj.resize(2);
  ps.fusion.token_bias.resize(2);
  ps.heads = pb.heads;
  small.check_params(ps);
  std::mt19937_64 rng(2);
  const Mat x = random_mat(3, 16, rng);
  Tape t;
  const Mat dropped = big.forward(x, bind(t, pb, false), ForwardOptions{{2}}).value();
  CHECK(max_abs_diff(dropped, small.predict(x, ps).logits) <= 1e-13);
  CHECK(max_abs_diff(dropped, big.predict(x, pb).logits) > 1e-9);
  CHECK_THROWS_AS(big.forward(x, bind(t, pb, false), ForwardOptions{{0, 1, 2, 3}}), ConfigError);
}

TEST_CASE("parameter layout is checked") {
  const PanCAN model(base_config());
  PanCANParams p = model.init_params(1);
  CHECK_NOTHROW(model.check_params(p));
  p.heads[0].weight = Mat::Zero(1, 1);
  CHECK_THROWS_AS(model.check_params(p), ConfigError);
  CHECK_THROWS_AS(model.predict(Mat::Zero(2, 16), model.init_params(1)), DimensionError);
  Mat nan = Mat::Zero(3, 16);
  nan(0, 0) = std::nan("");
  CHECK_THROWS_AS(model.predict(nan, model.init_params(1)), InputError);
}

TEST_CASE("trace records every layer and transition") {
  const PanCAN model(base_config());
  ForwardTrace tr;
  std::mt19937_64 rng(3);
  model.predict(random_mat(3, 16, rng), model.init_params(2), &tr);
  CHECK(tr.mocamn.size() == 3);
  CHECK(tr.cscamn.size() == 2);
  CHECK(tr.scale_outputs[1].cols() == 4);
  CHECK(tr.cscamn[0].anchors.size() == 4);
}

TEST_CASE("grouped head scatters group outputs to label order") {
  Tape t;
  const Var f = t.constant((Mat(2, 1) << 1.0, 2.0).finished());
  const std::vector<GroupHeadWeights<Var>> heads{
      {t.constant((Mat(1, 2) << 1.0, 0.0).finished()), t.constant(Mat::Zero(1, 1))},
      {t.constant((Mat(2, 2) << 0.0, 1.0, 1.0, 1.0).finished()), t.constant(Mat::Constant(2, 1, 0.5))}};
  const Mat out = grouped_head(f, heads, {{2}, {0, 1}}, 3).value();
  CHECK(out(2, 0) == 1.0);
  CHECK(out(0, 0) == 2.5);
  CHECK(out(1, 0) == 3.5);
}

TEST_CASE("label grouping by co-occurrence") {
  Mat co = Mat::Ones(4, 4);
  co(0, 2) = co(2, 0) = 5;
  co(1, 3) = co(3, 1) = 4;
  CHECK(group_labels(co, 2) == std::vector<std::vector<int>>{{0, 2}, {1, 3}});
  CHECK(group_labels(co, 4) == std::vector<std::vector<int>>{{0}, {1}, {2}, {3}});
  CHECK(group_labels(Mat::Zero(4, 4), 2) == std::vector<std::vector<int>>{{0, 1, 2}, {3}});
  CHECK_THROWS_AS(group_labels(co, 5), ConfigError);

  Mat labels(4, 3);
  labels << 1, -1, -1, -1, -1, 1, -1, -1, 1, -1, -1, -1;
  CHECK(cooccurrence(labels)(2, 2) == 2.0);
  CHECK(cooccurrence(labels)(0, 2) == 0.0);
  // Group {0, 1}: 1 positive of 8; group {2}: 2 of 4.
  CHECK(inverse_frequency_weights(labels, {{0, 1}, {2}}) == std::vector<double>{8.0, 2.0});
  CHECK(inverse_frequency_weights(-Mat::Ones(2, 1), {{0}}) == std::vector<double>{1.0});
}

TEST_CASE("multi-head fusion of a single token") {
  // One token attends only to itself: output = t + W_o V t.
  std::mt19937_64 rng(6);
  FusionWeights<Mat> w;
  w.query = random_mat(4, 4, rng);
  w.key = random_mat(4, 4, rng);
  w.value = random_mat(4, 4, rng);
  w.output = random_mat(4, 4, rng);
  const Mat tok = random_mat(4, 1, rng);
  const Vec expected = tok + w.output * w.value * tok;
  CHECK(max_abs_diff(multihead_fuse(tok, w, 2), expected) <= 1e-12);
}

TEST_CASE("end-to-end gradients match central differences") {
  const GradCheckReport r = testing::model_grad_check(5);
  CHECK(r.entries_checked > 500);
  CHECK(r.max_rel_error <= 1e-4);
}

TEST_CASE("fusion against a reference attention loop") {
  std::mt19937_64 rng(7);
  FusionWeights<Mat> w;
  w.query = random_mat(4, 4, rng);
  w.key = random_mat(4, 4, rng);
  w.value = random_mat(4, 4, rng);
  w.output = random_mat(4, 4, rng);
  const Mat tokens = random_mat(4, 4, rng);
  // Identical tokens: attention weights cannot matter.
  const Mat same = tokens.col(0).replicate(1, 3);
  CHECK(max_abs_diff(multihead_fuse(same, w, 2), same.col(0) + w.output * w.value * same.col(0)) <= 1e-12);

  const int heads = 2, dh = 2;
  const Mat q = w.query * tokens, k = w.key * tokens, v = w.value * tokens;
  Mat concat = Mat::Zero(4, 4);
  for (int h = 0; h < heads; ++h) {
    for (int i = 0; i < 4; ++i) {
      std::vector<double> s(4);
      double z = 0.0;
      for (int j = 0; j < 4; ++j) {
        double dot = 0.0;
        for (int r = 0; r < dh; ++r) dot += q(h * dh + r, i) * k(h * dh + r, j);
        z += s[static_cast<std::size_t>(j)] = std::exp(dot / std::sqrt(2.0));
      }
      for (int j = 0; j < 4; ++j) {
        for (int r = 0; r < dh; ++r) concat(h * dh + r, i) += s[static_cast<std::size_t>(j)] / z * v(h * dh + r, j);
      }
    }
  }
  const Vec expected = (tokens + w.output * concat).rowwise().mean();
  CHECK(max_abs_diff(multihead_fuse(tokens, w, heads), expected) <= 1e-10);
}

TEST_CASE("global feature is an affine map of the cell mean") {
  const PanCAN model(base_config());
  PanCANParams p = model.init_params(1);
  std::mt19937_64 rng(8);
  p.fusion.global_bias = random_mat(4, 1, rng);
  const Mat x = random_mat(3, 16, rng);
  Tape t;
  const Mat g = model.global_feature(t.constant(x), bind(t, p, false)).value();
  CHECK(max_abs_diff(g, p.fusion.global_proj * x.rowwise().mean() + p.fusion.global_bias) <= 1e-12);
  const Mat c = x.col(0).replicate(1, 16);
  CHECK(max_abs_diff(model.global_feature(t.constant(c), bind(t, p, false)).value(),
                     p.fusion.global_proj * x.col(0) + p.fusion.global_bias) <= 1e-12);
}

TEST_CASE("loss fixtures") {
  ModelConfig c = base_config();
  c.num_labels = 1;
  c = resolve(c);
  Tape t;
  const Mat W = (Mat(1, 2) << 0.5, -1.0).finished();
  const std::vector<GroupHeadWeights<Var>> heads{{t.constant(W), t.constant(Mat::Zero(1, 1))}};
  const std::vector<Var> zero{t.constant(Mat::Zero(1, 1))};
  CHECK(grouped_loss(zero, Mat::Ones(1, 1), c, heads).value()(0, 0) ==
        doctest::Approx(std::log(2.0) + 0.5 * 1.25));
  const std::vector<GroupHeadWeights<Var>> none{{t.constant(Mat::Zero(1, 2)), t.constant(Mat::Zero(1, 1))}};
  const std::vector<Var> sure{t.constant(Mat::Constant(1, 1, 40.0))};
  CHECK(grouped_loss(sure, Mat::Ones(1, 1), c, none).value()(0, 0) < 1e-15);

  // Per-term loop with two groups and unequal weights.
  ModelConfig g = base_config();
  g.groups = {{1, 3}, {0, 2}};
  g.group_weights = {0.4, 2.5};
  g = resolve(g);
  std::mt19937_64 rng(9);
  const std::vector<Mat> Ws{random_mat(2, 4, rng), random_mat(2, 4, rng)};
  const std::vector<GroupHeadWeights<Var>> gh{{t.constant(Ws[0]), t.constant(Mat::Zero(2, 1))},
                                              {t.constant(Ws[1]), t.constant(Mat::Zero(2, 1))}};
  const Mat z = random_mat(4, 3, rng, 2.0);
  Mat y(3, 4);
  y << 1, -1, -1, 1, -1, 1, 1, -1, 1, 1, -1, -1;
  std::vector<Var> logits;
  for (int b = 0; b < 3; ++b) logits.push_back(t.constant(z.col(b)));
  double expected = 0.5 * (Ws[0].squaredNorm() + Ws[1].squaredNorm());
  const double weight[4] = {2.5, 0.4, 2.5, 0.4};
  for (int b = 0; b < 3; ++b) {
    for (int l = 0; l < 4; ++l) {
      const double p = 1.0 / (1.0 + std::exp(-z(l, b)));
      expected -= weight[l] * (y(b, l) > 0 ? std::log(p) : std::log(1.0 - p));
    }
  }
  CHECK(grouped_loss(logits, y, g, gh).value()(0, 0) == doctest::Approx(expected).epsilon(1e-10));
}

TEST_CASE("grouping limits and exhaustive search at four labels") {
  std::mt19937_64 rng(10);
  const Mat a = random_mat(4, 4, rng).cwiseAbs();
  const Mat co = a + a.transpose();
  CHECK(group_labels(co, 1) == std::vector<std::vector<int>>{{0, 1, 2, 3}});
  // Two obvious pairs: the best 2+2 split by within-group co-occurrence.
  Mat pairs = Mat::Constant(4, 4, 0.5);
  pairs(0, 3) = pairs(3, 0) = 7;
  pairs(1, 2) = pairs(2, 1) = 6;
  const std::vector<std::vector<std::vector<int>>> splits{
      {{0, 1}, {2, 3}}, {{0, 2}, {1, 3}}, {{0, 3}, {1, 2}}};
  double best = -1.0;
  std::vector<std::vector<int>> winner;
  for (const auto& sp : splits) {
    const double within = pairs(sp[0][0], sp[0][1]) + pairs(sp[1][0], sp[1][1]);
    if (within > best) {
      best = within;
      winner = sp;
    }
  }
  CHECK(group_labels(pairs, 2) == winner);
}
