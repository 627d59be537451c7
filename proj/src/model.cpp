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

#include "pancan/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace pancan {
namespace {

bool wide_grid(const GridSpec& g) { return g.n_rows >= 4 && g.n_cols >= 4; }

void check_groups(const std::vector<std::vector<int>>& groups, int L) {
  std::vector<int> seen(static_cast<std::size_t>(L), 0);
  for (const auto& g : groups) {
    if (g.empty()) throw ConfigError("model: empty label group");
    for (int l : g) {
      if (l < 0 || l >= L) {
        throw ConfigError("model: group label " + std::to_string(l) + " outside 0.." +
                          std::to_string(L - 1));
      }
      ++seen[static_cast<std::size_t>(l)];
    }
  }
  for (int l = 0; l < L; ++l) {
    if (seen[static_cast<std::size_t>(l)] != 1) {
      throw ConfigError("model: label " + std::to_string(l) + " belongs to " +
                        std::to_string(seen[static_cast<std::size_t>(l)]) +
                        " groups, expected exactly one");
    }
  }
}

}  // namespace

ModelConfig resolve(ModelConfig cfg) {
  if (cfg.grid_rows < 1 || cfg.grid_cols < 1) throw ConfigError("model: grid must be at least 1x1");
  if (cfg.in_dim < 1) throw ConfigError("model: in_dim must be positive");
  if (cfg.num_labels < 1) throw ConfigError("model: num_labels must be positive");
  if (cfg.hidden_dim < 1 || cfg.attn_dim < 1 || cfg.fusion_dim < 1) {
    throw ConfigError("model: hidden, attention and fusion widths must be positive");
  }
  if (cfg.heads < 1 || cfg.fusion_dim % cfg.heads != 0) {
    throw ConfigError("model: heads (" + std::to_string(cfg.heads) +
                      ") must divide fusion_dim (" + std::to_string(cfg.fusion_dim) + ")");
  }
  if (cfg.directions < 1 || cfg.directions > kMaxDirections) {
    throw ConfigError("model: directions must be in 1..4");
  }
  if (!(cfg.tau >= 0.0 && cfg.tau <= 1.0)) {
    throw ConfigError("model: tau must lie in [0, 1], got " + std::to_string(cfg.tau));
  }
  if (cfg.nms_radius < 0) throw ConfigError("model: nms_radius must be non-negative");
  if (cfg.gamma < 0.0) cfg.gamma = 0.9 / static_cast<double>(cfg.directions);
  if (!std::isfinite(cfg.gamma)) throw ConfigError("model: gamma must be finite");
  if (!cfg.multi_order) cfg.gamma = 0.0;
  if (!cfg.cross_scale) cfg.num_scales = 1;

  const GridSpec base{cfg.grid_rows, cfg.grid_cols, cfg.grid_rows, cfg.grid_cols};
  const ScalePyramid pyr = build_pyramid(base, cfg.window, cfg.stride, cfg.num_scales);
  const std::size_t S = pyr.size();
  if (cfg.num_scales == 0) cfg.num_scales = static_cast<int>(S);
  if (static_cast<std::size_t>(cfg.num_scales) != S) {
    throw ConfigError("model: grid " + std::to_string(cfg.grid_rows) + "x" +
                      std::to_string(cfg.grid_cols) + " yields only " + std::to_string(S) +
                      " scales, " + std::to_string(cfg.num_scales) + " requested");
  }
  if (cfg.orders.empty()) {
    for (const GridSpec& g : pyr.scales) {
      cfg.orders.push_back(wide_grid(g) ? std::vector<int>{1, 2} : std::vector<int>{1});
    }
  }
  if (cfg.orders.size() == 1 && S > 1) cfg.orders.resize(S, cfg.orders.front());
  if (cfg.orders.size() != S) throw ConfigError("model: need one order list per scale");
  for (const auto& o : cfg.orders) {
    if (o.empty()) throw ConfigError("model: empty order list");
    for (int k : o) {
      if (k < 1) throw ConfigError("model: neighborhood order must be >= 1");
    }
  }
  if (cfg.depth.empty()) cfg.depth.assign(S, 3);
  if (cfg.depth.size() == 1 && S > 1) cfg.depth.resize(S, cfg.depth.front());
  if (cfg.depth.size() != S) throw ConfigError("model: need one layer count per scale");
  for (int t : cfg.depth) {
    if (t < 1) throw ConfigError("model: layer count must be >= 1");
  }
  if (cfg.groups.empty()) {
    auto& all = cfg.groups.emplace_back(static_cast<std::size_t>(cfg.num_labels));
    std::iota(all.begin(), all.end(), 0);
  }
  check_groups(cfg.groups, cfg.num_labels);
  if (cfg.group_weights.empty()) cfg.group_weights.assign(cfg.groups.size(), 1.0);
  if (cfg.group_weights.size() != cfg.groups.size()) {
    throw ConfigError("model: " + std::to_string(cfg.group_weights.size()) +
                      " group weights for " + std::to_string(cfg.groups.size()) + " groups");
  }
  for (double c : cfg.group_weights) {
    if (!(c > 0.0) || !std::isfinite(c)) throw ConfigError("model: group weights must be positive");
  }
  return cfg;
}

PanCAN::PanCAN(ModelConfig cfg) : cfg_(resolve(std::move(cfg))) {
  const GridSpec base{cfg_.grid_rows, cfg_.grid_cols, cfg_.grid_rows, cfg_.grid_cols};
  pyramid_ = build_pyramid(base, cfg_.window, cfg_.stride, cfg_.num_scales);
  const WalkRule walk{cfg_.random_walk ? WalkMode::kAttention : WalkMode::kUniform, cfg_.tau,
                      cfg_.threshold};
  for (std::size_t s = 0; s < pyramid_.size(); ++s) {
    const auto& orders = cfg_.orders[s];
    const int max_order = *std::max_element(orders.begin(), orders.end());
    structures_.push_back(build_mocamn_structure(pyramid_.scales[s], cfg_.directions, max_order,
                                                 static_cast<int>(s)));
    const Index base_dim = s == 0 ? cfg_.in_dim : cfg_.hidden_dim;
    auto& specs = layer_specs_.emplace_back();
    for (int t = 0; t < cfg_.depth[s]; ++t) {
      MocamnLayerSpec spec;
      spec.in_dim = t == 0 ? base_dim : cfg_.hidden_dim;
      spec.base_dim = base_dim;
      spec.out_dim = cfg_.hidden_dim;
      spec.attn_dim = cfg_.attn_dim;
      spec.orders = orders;
      spec.gamma = cfg_.gamma;
      spec.walk = walk;
      specs.push_back(spec);
    }
    if (s + 1 < pyramid_.size()) {
      macro_maps_.push_back(macro_cell_map(pyramid_.scales[s], pyramid_.window, pyramid_.stride));
    }
  }
  cscamn_spec_ = {cfg_.hidden_dim, cfg_.attn_dim, cfg_.hidden_dim, cfg_.nms_radius};
  group_of_label_.assign(static_cast<std::size_t>(cfg_.num_labels), 0);
  for (std::size_t g = 0; g < cfg_.groups.size(); ++g) {
    for (int l : cfg_.groups[g]) group_of_label_[static_cast<std::size_t>(l)] = static_cast<int>(g);
  }
}

PanCANParams PanCAN::init_params(std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  PanCANParams p;
  const Index F = cfg_.fusion_dim;
  if (cfg_.variant == ModelVariant::kPanCAN) {
    for (std::size_t s = 0; s < pyramid_.size(); ++s) {
      auto& layers = p.mocamn.emplace_back();
      for (const MocamnLayerSpec& spec : layer_specs_[s]) {
        layers.push_back(init_mocamn_layer(spec, structures_[s], rng));
      }
    }
    for (std::size_t t = 0; t < macro_maps_.size(); ++t) p.cscamn.push_back(init_cscamn(cscamn_spec_, rng));
    for (std::size_t s = 0; s < pyramid_.size(); ++s) {
      p.fusion.token_proj.push_back(glorot(F, cfg_.hidden_dim, rng));
      p.fusion.token_bias.push_back(Mat::Zero(F, 1));
    }
    p.fusion.query = glorot(F, F, rng);
    p.fusion.key = glorot(F, F, rng);
    p.fusion.value = glorot(F, F, rng);
    p.fusion.output = glorot(F, F, rng);
  } else {
    p.fusion.query = p.fusion.key = p.fusion.value = p.fusion.output = Mat(0, 0);
  }
  p.fusion.global_proj = glorot(F, cfg_.in_dim, rng);
  p.fusion.global_bias = Mat::Zero(F, 1);
  for (const auto& g : cfg_.groups) {
    p.heads.push_back({glorot(static_cast<Index>(g.size()), F, rng),
                       Mat::Zero(static_cast<Index>(g.size()), 1)});
  }
  return p;
}

void PanCAN::check_params(const PanCANParams& params) const {
  const PanCANParams ref = init_params(0);
  std::vector<std::pair<std::string, std::pair<Index, Index>>> shapes;
  visit(ref, [&](const std::string& name, const Mat& m) {
    shapes.push_back({name, {m.rows(), m.cols()}});
  });
  std::size_t i = 0;
  bool ok = true;
  std::string where;
  visit(params, [&](const std::string& name, const Mat& m) {
    if (!ok) return;
    if (i >= shapes.size() || shapes[i].first != name ||
        shapes[i].second != std::pair<Index, Index>{m.rows(), m.cols()}) {
      ok = false;
      where = name;
    }
    ++i;
  });
  if (ok && i != shapes.size()) {
    ok = false;
    where = "tensor count";
  }
  if (!ok) throw ConfigError("model: parameters do not match the configuration at " + where);
}

Var PanCAN::global_feature(const Var& feats, const PanCANVars& w) const {
  return ad::add_bias(ad::matmul(w.fusion.global_proj, ad::col_mean(feats)), w.fusion.global_bias);
}

Var PanCAN::forward(const Mat& feats, const PanCANVars& w, const ForwardOptions& opts,
                    ForwardTrace* trace) const {
  const int n = pyramid_.scales.front().cells();
  if (feats.rows() != cfg_.in_dim || feats.cols() != n) {
    throw DimensionError("model: features are " + shape_str(feats) + ", expected " +
                         shape_str(cfg_.in_dim, n));
  }
  if (!feats.allFinite()) throw InputError("model: non-finite input feature");
  Tape& tape = *w.fusion.global_proj.tape();
  const Var input = tape.constant(feats);
  if (cfg_.variant == ModelVariant::kContextFree) {
    // Per-cell encoder and the scale tokens' sum pooling, without any cell
    // interaction.
    const Var cells = ad::relu(ad::add_bias(ad::matmul(w.fusion.global_proj, input),
                                            w.fusion.global_bias));
    const Var pooled = ad::col_sum(cells);
    return grouped_head(pooled, w.heads, cfg_.groups, cfg_.num_labels);
  }
  const std::size_t S = pyramid_.size();
  if (trace != nullptr) {
    trace->mocamn.assign(S, {});
    trace->cscamn.assign(macro_maps_.size(), {});
    trace->scale_outputs.clear();
  }
  std::vector<Var> tokens;
  std::vector<int> token_ids;
  auto keep = [&opts](int id) {
    return std::find(opts.dropped_tokens.begin(), opts.dropped_tokens.end(), id) ==
           opts.dropped_tokens.end();
  };
  Var x = input;
  for (std::size_t s = 0; s < S; ++s) {
    const Var psi = mocamn_stack(x, w.mocamn[s], layer_specs_[s], structures_[s],
                                 trace ? &trace->mocamn[s] : nullptr);
    if (trace != nullptr) trace->scale_outputs.push_back(psi.value());
    if (keep(static_cast<int>(s))) {
      tokens.push_back(ad::add_bias(ad::matmul(w.fusion.token_proj[s], ad::col_sum(psi)),
                                    w.fusion.token_bias[s]));
    }
    if (s + 1 < S) {
      x = cscamn_module(psi, macro_maps_[s], w.cscamn[s], cscamn_spec_,
                        trace ? &trace->cscamn[s] : nullptr);
    }
  }
  if (keep(static_cast<int>(S))) tokens.push_back(global_feature(input, w));
  if (tokens.empty()) throw ConfigError("model: every scale token was dropped");
  const Var fused = multihead_fuse(ad::concat_cols(tokens), w.fusion, cfg_.heads);
  return grouped_head(fused, w.heads, cfg_.groups, cfg_.num_labels);
}

Prediction PanCAN::predict(const Mat& feats, const PanCANParams& params,
                           ForwardTrace* trace) const {
  Tape tape;
  const Var logits = forward(feats, bind(tape, params, false), {}, trace);
  Prediction p;
  p.logits = logits.value().col(0);
  p.probs = p.logits.unaryExpr([](double z) { return 1.0 / (1.0 + std::exp(-z)); });
  return p;
}

Var multihead_fuse(const Var& tokens, const FusionWeights<Var>& w, int heads) {
  const Index F = tokens.rows();
  if (heads < 1 || F % heads != 0) throw ConfigError("multihead_fuse: heads must divide width");
  const Index dh = F / heads;
  const Var q = ad::matmul(w.query, tokens);
  const Var k = ad::matmul(w.key, tokens);
  const Var v = ad::matmul(w.value, tokens);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<Var> outs;
  for (int h = 0; h < heads; ++h) {
    const Var qh = ad::middle_rows(q, h * dh, dh);
    const Var kh = ad::middle_rows(k, h * dh, dh);
    const Var vh = ad::middle_rows(v, h * dh, dh);
    // attn(i, j): weight of token j for query token i.
    const Var attn = ad::softmax_rows(ad::scale(ad::matmul(ad::transpose(qh), kh), scale));
    outs.push_back(ad::matmul(vh, ad::transpose(attn)));
  }
  const Var mixed = ad::add(tokens, ad::matmul(w.output, ad::concat_rows(outs)));
  return ad::col_mean(mixed);
}

Vec multihead_fuse(const Mat& tokens, const FusionWeights<Mat>& w, int heads) {
  Tape tape;
  FusionWeights<Var> v;
  v.query = tape.constant(w.query);
  v.key = tape.constant(w.key);
  v.value = tape.constant(w.value);
  v.output = tape.constant(w.output);
  return multihead_fuse(tape.constant(tokens), v, heads).value().col(0);
}

Var grouped_head(const Var& feature, std::span<const GroupHeadWeights<Var>> heads,
                 const std::vector<std::vector<int>>& groups, int num_labels) {
  if (heads.size() != groups.size()) throw ConfigError("grouped_head: one head per group");
  Tape& tape = *feature.tape();
  std::vector<Var> parts;
  std::vector<Index> order;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    parts.push_back(ad::add_bias(ad::matmul(heads[g].weight, feature), heads[g].bias));
    for (int l : groups[g]) order.push_back(l);
  }
  const Var stacked = ad::concat_rows(parts);
  // Scatter rows back to label order: out = E * stacked.
  Mat scatter = Mat::Zero(num_labels, static_cast<Index>(order.size()));
  for (std::size_t i = 0; i < order.size(); ++i) scatter(order[i], static_cast<Index>(i)) = 1.0;
  return ad::matmul(tape.constant(scatter), stacked);
}

Mat binary_targets(const Mat& labels_pm1) {
  Mat out(labels_pm1.rows(), labels_pm1.cols());
  for (Index i = 0; i < labels_pm1.rows(); ++i) {
    for (Index j = 0; j < labels_pm1.cols(); ++j) {
      const double y = labels_pm1(i, j);
      if (y != 1.0 && y != -1.0) {
        throw InputError("labels must be -1 or +1, got " + std::to_string(y) + " at (" +
                         std::to_string(i) + "," + std::to_string(j) + ")");
      }
      out(i, j) = y > 0 ? 1.0 : 0.0;
    }
  }
  return out;
}

namespace {

Mat label_weights(const ModelConfig& cfg) {
  Mat w(cfg.num_labels, 1);
  for (std::size_t g = 0; g < cfg.groups.size(); ++g) {
    for (int l : cfg.groups[g]) w(l, 0) = cfg.group_weights[g];
  }
  return w;
}

}  // namespace

Var grouped_loss(std::span<const Var> logits, const Mat& labels, const ModelConfig& cfg,
                 std::span<const GroupHeadWeights<Var>> heads) {
  if (logits.empty() || static_cast<Index>(logits.size()) != labels.rows() ||
      labels.cols() != cfg.num_labels) {
    throw DimensionError("grouped_loss: " + std::to_string(logits.size()) + " outputs for labels " +
                         shape_str(labels));
  }
  const Mat targets = binary_targets(labels);
  const Mat weights = label_weights(cfg);
  std::vector<Var> terms;
  for (std::size_t b = 0; b < logits.size(); ++b) {
    terms.push_back(ad::bce_with_logits(
        logits[b], targets.row(static_cast<Index>(b)).transpose(), weights));
  }
  for (const auto& h : heads) terms.push_back(ad::scale(ad::squared_norm(h.weight), 0.5));
  Var total = terms.front();
  for (std::size_t i = 1; i < terms.size(); ++i) total = ad::add(total, terms[i]);
  return total;
}

double grouped_loss(std::span<const Prediction> preds, const Mat& labels, const ModelConfig& cfg,
                    const PanCANParams& params) {
  Tape tape;
  std::vector<Var> logits;
  for (const Prediction& p : preds) logits.push_back(tape.constant(p.logits));
  std::vector<GroupHeadWeights<Var>> heads;
  for (const auto& h : params.heads) heads.push_back({tape.constant(h.weight), tape.constant(h.bias)});
  return grouped_loss(logits, labels, cfg, heads).value()(0, 0);
}

Mat cooccurrence(const Mat& labels_pm1) {
  const Mat t = binary_targets(labels_pm1);
  return t.transpose() * t;
}

std::vector<std::vector<int>> group_labels(const Mat& cooc, int G) {
  const int L = static_cast<int>(cooc.rows());
  if (cooc.cols() != L) throw DimensionError("group_labels: co-occurrence must be square");
  if (G < 1 || G > L) {
    throw ConfigError("group_labels: G=" + std::to_string(G) + " outside 1.." + std::to_string(L));
  }
  std::vector<std::vector<int>> groups;
  for (int l = 0; l < L; ++l) groups.push_back({l});
  while (static_cast<int>(groups.size()) > G) {
    double best = -std::numeric_limits<double>::infinity();
    std::size_t ba = 0;
    std::size_t bb = 1;
    // Groups stay ordered by their smallest label, so the first strict
    // maximum found is the lowest-index tie winner.
    for (std::size_t a = 0; a < groups.size(); ++a) {
      for (std::size_t b = a + 1; b < groups.size(); ++b) {
        double gain = 0.0;
        for (int i : groups[a]) {
          for (int j : groups[b]) gain += cooc(i, j);
        }
        if (gain > best) {
          best = gain;
          ba = a;
          bb = b;
        }
      }
    }
    groups[ba].insert(groups[ba].end(), groups[bb].begin(), groups[bb].end());
    std::sort(groups[ba].begin(), groups[ba].end());
    groups.erase(groups.begin() + static_cast<std::ptrdiff_t>(bb));
  }
  return groups;
}

std::vector<double> inverse_frequency_weights(const Mat& labels_pm1,
                                              const std::vector<std::vector<int>>& groups) {
  const Mat t = binary_targets(labels_pm1);
  std::vector<double> out;
  for (const auto& g : groups) {
    double pos = 0.0;
    for (int l : g) pos += t.col(l).sum();
    const double total = static_cast<double>(t.rows()) * static_cast<double>(g.size());
    out.push_back(pos > 0.0 ? total / pos : 1.0);
  }
  return out;
}

}  // namespace pancan
