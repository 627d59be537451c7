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

// Learnable tensors of every network stage. Each container is templated on
// its element so the same layout holds plain matrices (storage, optimizer,
// checkpoints) and tape variables (one forward pass).

#pragma once

#include <string>
#include <vector>

#include "pancan/autodiff.hpp"

namespace pancan {

/// Per-order attention projections, shared by every direction at a layer.
template <typename T>
struct OrderWeights {
  T query;
  T member;
  T value;
};

template <typename T>
struct MocamnLayerWeights {
  std::vector<OrderWeights<T>> orders;  // aligned with the layer's order list
  std::vector<T> adjacency;             // one 1 x nnz weight row per direction
  T projection;
  T bias;
};

template <typename T>
struct CscamnWeights {
  T query;
  T member;
  T value;
  T down;
  T bias;
};

template <typename T>
struct FusionWeights {
  std::vector<T> token_proj;  // one per scale
  std::vector<T> token_bias;
  T global_proj;
  T global_bias;
  T query;
  T key;
  T value;
  T output;
};

template <typename T>
struct GroupHeadWeights {
  T weight;
  T bias;
};

template <typename T>
struct PanCANWeights {
  std::vector<std::vector<MocamnLayerWeights<T>>> mocamn;  // [scale][layer]
  std::vector<CscamnWeights<T>> cscamn;                    // [scale transition]
  FusionWeights<T> fusion;
  std::vector<GroupHeadWeights<T>> heads;                  // [group]
};

using PanCANParams = PanCANWeights<Mat>;
using PanCANVars = PanCANWeights<Var>;

// visit(w, prefix, f) calls f(name, element) for every tensor in a fixed
// order; map<To>(w, f) rebuilds the same layout with f applied to each one.

template <typename W, typename F>
void visit_order(W& w, const std::string& p, F&& f) {
  f(p + ".query", w.query);
  f(p + ".member", w.member);
  f(p + ".value", w.value);
}

template <typename W, typename F>
void visit_layer(W& w, const std::string& p, F&& f) {
  for (std::size_t i = 0; i < w.orders.size(); ++i) {
    visit_order(w.orders[i], p + ".order" + std::to_string(i), f);
  }
  for (std::size_t c = 0; c < w.adjacency.size(); ++c) {
    f(p + ".adjacency" + std::to_string(c), w.adjacency[c]);
  }
  f(p + ".projection", w.projection);
  f(p + ".bias", w.bias);
}

template <typename W, typename F>
void visit_cscamn(W& w, const std::string& p, F&& f) {
  f(p + ".query", w.query);
  f(p + ".member", w.member);
  f(p + ".value", w.value);
  f(p + ".down", w.down);
  f(p + ".bias", w.bias);
}

template <typename W, typename F>
void visit(W& w, F&& f) {
  for (std::size_t s = 0; s < w.mocamn.size(); ++s) {
    for (std::size_t t = 0; t < w.mocamn[s].size(); ++t) {
      visit_layer(w.mocamn[s][t], "mocamn.s" + std::to_string(s) + ".t" + std::to_string(t), f);
    }
  }
  for (std::size_t s = 0; s < w.cscamn.size(); ++s) {
    visit_cscamn(w.cscamn[s], "cscamn.s" + std::to_string(s), f);
  }
  for (std::size_t s = 0; s < w.fusion.token_proj.size(); ++s) {
    f("fusion.token" + std::to_string(s) + ".proj", w.fusion.token_proj[s]);
    f("fusion.token" + std::to_string(s) + ".bias", w.fusion.token_bias[s]);
  }
  f(std::string("fusion.global.proj"), w.fusion.global_proj);
  f(std::string("fusion.global.bias"), w.fusion.global_bias);
  f(std::string("fusion.query"), w.fusion.query);
  f(std::string("fusion.key"), w.fusion.key);
  f(std::string("fusion.value"), w.fusion.value);
  f(std::string("fusion.output"), w.fusion.output);
  for (std::size_t g = 0; g < w.heads.size(); ++g) {
    f("head" + std::to_string(g) + ".weight", w.heads[g].weight);
    f("head" + std::to_string(g) + ".bias", w.heads[g].bias);
  }
}

template <typename To, typename From, typename F>
OrderWeights<To> map(const OrderWeights<From>& w, F&& f) {
  return {f(w.query), f(w.member), f(w.value)};
}

template <typename To, typename From, typename F>
MocamnLayerWeights<To> map(const MocamnLayerWeights<From>& w, F&& f) {
  MocamnLayerWeights<To> out;
  for (const auto& o : w.orders) out.orders.push_back(map<To>(o, f));
  for (const auto& a : w.adjacency) out.adjacency.push_back(f(a));
  out.projection = f(w.projection);
  out.bias = f(w.bias);
  return out;
}

template <typename To, typename From, typename F>
CscamnWeights<To> map(const CscamnWeights<From>& w, F&& f) {
  return {f(w.query), f(w.member), f(w.value), f(w.down), f(w.bias)};
}

template <typename To, typename From, typename F>
PanCANWeights<To> map(const PanCANWeights<From>& w, F&& f) {
  PanCANWeights<To> out;
  for (const auto& scale : w.mocamn) {
    auto& layers = out.mocamn.emplace_back();
    for (const auto& layer : scale) layers.push_back(map<To>(layer, f));
  }
  for (const auto& c : w.cscamn) out.cscamn.push_back(map<To>(c, f));
  for (const auto& t : w.fusion.token_proj) out.fusion.token_proj.push_back(f(t));
  for (const auto& t : w.fusion.token_bias) out.fusion.token_bias.push_back(f(t));
  out.fusion.global_proj = f(w.fusion.global_proj);
  out.fusion.global_bias = f(w.fusion.global_bias);
  out.fusion.query = f(w.fusion.query);
  out.fusion.key = f(w.fusion.key);
  out.fusion.value = f(w.fusion.value);
  out.fusion.output = f(w.fusion.output);
  for (const auto& h : w.heads) out.heads.push_back({f(h.weight), f(h.bias)});
  return out;
}

/// Records every tensor on the tape, as parameters or as constants.
template <typename W>
auto bind(Tape& tape, const W& w, bool trainable) {
  return map<Var>(w, [&tape, trainable](const Mat& m) {
    return trainable ? tape.parameter(m) : tape.constant(m);
  });
}

/// Flat tensor list in visit order.
template <typename W>
std::vector<Mat> flatten(const W& w) {
  std::vector<Mat> out;
  visit(w, [&out](const std::string&, const Mat& m) { out.push_back(m); });
  return out;
}

template <typename W>
void unflatten(std::span<const Mat> flat, W& w) {
  std::size_t i = 0;
  visit(w, [&](const std::string& name, Mat& m) {
    if (i >= flat.size() || flat[i].rows() != m.rows() || flat[i].cols() != m.cols()) {
      throw DimensionError("unflatten: tensor " + name + " does not match");
    }
    m = flat[i++];
  });
  if (i != flat.size()) throw DimensionError("unflatten: extra tensors");
}

template <typename W>
std::size_t scalar_count(const W& w) {
  std::size_t n = 0;
  visit(w, [&n](const std::string&, const Mat& m) { n += static_cast<std::size_t>(m.size()); });
  return n;
}

}  // namespace pancan
